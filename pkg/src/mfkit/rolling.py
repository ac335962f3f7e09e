"""Rolling-window spectra, eigenvalue tracks and composite indices."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .crosscorr import mp_bounds, pearson_matrix, rho_matrix_eigen
from .errors import AlignmentError, InputError, WindowTooShort
from .pipeline import MFDFAParams, mfdfa
from .spectrum import SingularitySpectrum, average_spectrum
from .timeseries import Series, as_series


@dataclass(frozen=True)
class RollingPlan:
    """Windows of ``window`` samples advanced by ``step``; each is dated by its last sample."""

    window: int
    step: int = 20

    def __post_init__(self):
        if self.window < 2:
            raise InputError("window must hold at least 2 samples")
        if self.step < 1:
            raise InputError("step must be at least 1")

    def count(self, length: int) -> int:
        if self.window > length:
            return 0
        return (length - self.window) // self.step + 1

    def starts(self, length: int) -> range:
        if self.window > length:
            raise WindowTooShort(f"series of length {length} is shorter than the window {self.window}")
        return range(0, length - self.window + 1, self.step)


def _end_label(x: Series, start: int, window: int):
    end = start + window - 1
    return x.timestamps[end] if x.timestamps is not None else end


def _fmt_date(d) -> str:
    return d.isoformat() if hasattr(d, "isoformat") else str(d)


@dataclass(frozen=True)
class SpectrumTrack:
    dates: tuple
    spectra: tuple
    plan: RollingPlan

    def __len__(self):
        return len(self.spectra)

    def summaries(self) -> dict[str, np.ndarray]:
        keys = ("hurst", "delta_alpha", "delta_L", "delta_R", "asymmetry", "alpha0", "alpha_min", "alpha_max")
        return {k: np.array([getattr(s, k) for s in self.spectra]) for k in keys}

    def write_long_csv(self, path, fmt: str = "%.12g") -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "q", "alpha", "f"])
            for d, sp in zip(self.dates, self.spectra):
                for q, a, f in zip(sp.q_values, sp.alpha, sp.f_alpha):
                    w.writerow([_fmt_date(d), fmt % q, fmt % a, fmt % f])

    def write_summary_csv(self, path, fmt: str = "%.12g") -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "H", "delta_alpha", "delta_L", "delta_R", "A", "alpha0", "quality"])
            for d, sp in zip(self.dates, self.spectra):
                vals = (sp.hurst, sp.delta_alpha, sp.delta_L, sp.delta_R, sp.asymmetry, sp.alpha0)
                w.writerow([_fmt_date(d), *(fmt % v for v in vals), sp.summary()["quality"]])

    def write_projection_csv(self, path, fmt: str = "%.12g") -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "alpha_min", "alpha0", "alpha_max"])
            for d, sp in zip(self.dates, self.spectra):
                w.writerow([_fmt_date(d), fmt % sp.alpha_min, fmt % sp.alpha0, fmt % sp.alpha_max])


def _window_spectrum(args) -> SingularitySpectrum:
    values, params = args
    return mfdfa(values, params).spectrum


def _map(fn, items, n_jobs: int):
    if n_jobs == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * n_jobs))))


def rolling_spectra(x, plan: RollingPlan, params: MFDFAParams = MFDFAParams(), n_jobs: int = 1) -> SpectrumTrack:
    """One singularity spectrum per window position.

    Each window is normalized on its own (``params.normalize``) before MFDFA;
    results do not depend on ``n_jobs``.
    """
    x = as_series(x)
    starts = plan.starts(len(x))
    s_max = params.s_max if params.s_max is not None else plan.window // 5
    if s_max < params.s_min or plan.window < 2 * s_max:
        raise WindowTooShort(f"window {plan.window} too short for scales up to {s_max}")
    items = [(x.values[a:a + plan.window], params) for a in starts]
    spectra = _map(_window_spectrum, items, n_jobs)
    dates = tuple(_end_label(x, a, plan.window) for a in starts)
    return SpectrumTrack(dates, tuple(spectra), plan)


def rolling_average_spectra(components: Sequence, plan: RollingPlan, params: MFDFAParams = MFDFAParams(),
                            n_jobs: int = 1) -> SpectrumTrack:
    """Per-window mean spectrum over several series (index-versus-components view)."""
    tracks = [rolling_spectra(c, plan, params, n_jobs) for c in components]
    if len({len(t) for t in tracks}) != 1:
        raise AlignmentError("component series differ in length")
    avg = tuple(average_spectrum(group) for group in zip(*(t.spectra for t in tracks)))
    return SpectrumTrack(tracks[0].dates, avg, plan)


@dataclass(frozen=True)
class EigenTrack:
    dates: tuple
    lambda1: np.ndarray
    gamma1: np.ndarray
    mp_lower: float
    mp_upper: float
    window: int
    step: int
    n_series: int

    def __len__(self):
        return self.lambda1.size

    def to_csv(self, path, fmt: str = "%.12g") -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "lambda1", "gamma1", "mp_upper", "mp_lower"])
            for d, l1, g1 in zip(self.dates, self.lambda1, self.gamma1):
                w.writerow([_fmt_date(d), fmt % l1, fmt % g1, fmt % self.mp_upper, fmt % self.mp_lower])


def _check_aligned(series: Sequence[Series]) -> None:
    n = len(series[0])
    ts = series[0].timestamps
    for s in series[1:]:
        if len(s) != n:
            raise AlignmentError(f"series {s.label!r} has {len(s)} samples, expected {n}")
        if (ts is None) != (s.timestamps is None) or (ts is not None and ts != s.timestamps):
            raise AlignmentError(f"series {s.label!r} is not aligned in time with {series[0].label!r}")


def rolling_eigen(series: Sequence, window: int = 100, step: int = 1, q: float = 2.0, s: int = 100,
                  m: int = 2) -> EigenTrack:
    """Largest eigenvalues of the Pearson (lambda_1) and rho_q(s) (gamma_1) matrices per window."""
    series = [as_series(x) for x in series]
    if len(series) < 2:
        raise InputError("need at least two series")
    if s > window:
        raise InputError(f"scale {s} exceeds window {window}")
    _check_aligned(series)
    plan = RollingPlan(window, step)
    starts = plan.starts(len(series[0]))
    M = np.vstack([x.values for x in series])
    lam, gam = [], []
    for a in starts:
        block = M[:, a:a + window]
        lam.append(pearson_matrix(block).largest)
        gam.append(rho_matrix_eigen(block, q, s, m=m).largest)
    lo, hi = mp_bounds(window, len(series))
    dates = tuple(_end_label(series[0], a, window) for a in starts)
    return EigenTrack(dates, np.array(lam), np.array(gam), lo, hi, window, step, len(series))


def composite_index(series: Sequence, weights: Optional[Sequence[float]] = None) -> Series:
    """Pointwise (weighted) sum of aligned price series."""
    series = [as_series(x) for x in series]
    if not series:
        raise InputError("no series to combine")
    _check_aligned(series)
    if weights is None:
        weights = np.ones(len(series))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(series),):
        raise InputError("need exactly one weight per series")
    total = np.zeros(len(series[0]))
    for w, x in zip(weights, series):
        total = total + w * x.values
    return Series(total, series[0].timestamps, "composite")
