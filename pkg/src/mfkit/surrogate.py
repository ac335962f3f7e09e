"""Surrogate series for multifractality significance tests.

All generators are pure functions of (input, seed).  Per-realization seeds
for averaged surrogate spectra are spawned from the master seed with
``numpy.random.SeedSequence``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InputError
from .pipeline import MFDFAParams, mfdfa
from .spectrum import SingularitySpectrum, average_spectrum
from .timeseries import Series, as_series

KINDS = ("shuffle", "phase_randomized", "gaussianized")


@dataclass(frozen=True)
class SurrogateSpec:
    kind: str = "shuffle"
    realizations: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown surrogate kind {self.kind!r}; expected one of {KINDS}")
        if self.realizations < 1:
            raise InputError("realizations must be at least 1")


def shuffle(x, seed=None) -> Series:
    x = as_series(x)
    rng = np.random.default_rng(seed)
    return x.replace(rng.permutation(x.values))


def phase_randomize(x, seed=None) -> Series:
    """Keep the Fourier moduli, draw new uniform phases.

    The zero-frequency bin and (for even length) the Nyquist bin keep their
    original phase so the output stays real with unchanged mean.
    """
    x = as_series(x)
    v = x.values
    if v.size < 4:
        raise InputError("phase randomization needs at least 4 samples")
    rng = np.random.default_rng(seed)
    spec = np.fft.rfft(v)
    phases = rng.uniform(0.0, 2 * np.pi, spec.size)
    phases[0] = 0.0
    if v.size % 2 == 0:
        phases[-1] = 0.0
    out = np.fft.irfft(spec * np.exp(1j * phases), n=v.size)
    return x.replace(out)


def gaussianize(x, seed=None) -> Series:
    """Replace values by expected normal order statistics of their ranks.

    Uses Blom's approximation ``Phi^-1((r - 3/8) / (T + 1/4))``; tied values
    share their average rank and therefore their output value.  ``seed`` is
    accepted for interface symmetry and not used.
    """
    x = as_series(x)
    ranks = stats.rankdata(x.values, method="average")
    n = ranks.size
    return x.replace(stats.norm.ppf((ranks - 0.375) / (n + 0.25)))


_GENERATORS = {
    "shuffle": shuffle,
    "phase_randomized": phase_randomize,
    "gaussianized": gaussianize,
}


def make_surrogate(x, kind: str, seed=None) -> Series:
    try:
        gen = _GENERATORS[kind]
    except KeyError:
        raise InputError(f"unknown surrogate kind {kind!r}") from None
    return gen(x, seed)


def realization_seeds(seed: int, n: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def surrogates(x, spec: SurrogateSpec) -> list[Series]:
    return [make_surrogate(x, spec.kind, s) for s in realization_seeds(spec.seed, spec.realizations)]


def surrogate_spectrum(x, spec: SurrogateSpec, params: MFDFAParams = MFDFAParams()) -> SingularitySpectrum:
    """Average singularity spectrum over ``spec.realizations`` surrogates."""
    spectra = [mfdfa(s, params).spectrum for s in surrogates(x, spec)]
    return average_spectrum(spectra)
