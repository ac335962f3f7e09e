"""Synthetic series with known scaling, used as estimator oracles.

Random draws use numpy's default ``Generator`` (PCG64) seeded from the
caller's integer seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError
from .timeseries import Series


@dataclass(frozen=True)
class CascadeSpec:
    """Binomial multiplicative cascade on ``2**levels`` cells.

    With ``seed=None`` the cascade is deterministic: at every split the left
    child receives weight ``p``.  A seed randomizes which child gets ``p``
    (``shuffle_placement``) and, with ``random_signs``, attaches i.i.d. +/-1
    signs to the cells.
    """

    p: float
    levels: int
    seed: Optional[int] = None
    shuffle_placement: bool = True
    random_signs: bool = False

    def __post_init__(self):
        if not 0.5 < self.p < 1:
            raise InputError("cascade weight p must lie in (0.5, 1)")
        if self.levels < 1:
            raise InputError("cascade needs at least one level")


def analytic_hurst(q, p: float):
    """Generalized Hurst exponent of the binomial cascade.

    h(q) = 1/q - log2(p**q + (1-p)**q) / q, with the q -> 0 limit
    -(log2 p + log2(1-p)) / 2.
    """
    q = np.asarray(q, dtype=float)
    out = np.empty_like(q)
    nz = q != 0
    qn = q[nz]
    out[nz] = 1.0 / qn - np.log2(p**qn + (1 - p) ** qn) / qn
    out[~nz] = -0.5 * (np.log2(p) + np.log2(1 - p))
    return out if out.ndim else float(out)


def analytic_alpha_f(q, p: float):
    """Exact (alpha(q), f(q)) of the binomial cascade."""
    q = np.asarray(q, dtype=float)
    a, b = p**q, (1 - p) ** q
    alpha = -(a * np.log2(p) + b * np.log2(1 - p)) / (a + b)
    tau = -np.log2(a + b)
    return alpha, q * alpha - tau


def binomial_cascade(spec: CascadeSpec) -> Series:
    """Measure of the cascade; values sum to one."""
    rng = None if spec.seed is None else np.random.default_rng(spec.seed)
    mass = np.ones(1)
    p = spec.p
    for _ in range(spec.levels):
        left = np.full(mass.size, p)
        if rng is not None and spec.shuffle_placement:
            flip = rng.random(mass.size) < 0.5
            left[flip] = 1 - p
        nxt = np.empty(2 * mass.size)
        nxt[0::2] = mass * left
        nxt[1::2] = mass * (1 - left)
        mass = nxt
    if rng is not None and spec.random_signs:
        mass = mass * rng.choice([-1.0, 1.0], size=mass.size)
    label = f"cascade(p={p},levels={spec.levels})"
    return Series(mass, None, label)


def white_noise(T: int, seed: Optional[int] = None) -> Series:
    if T < 2:
        raise InputError("white noise needs T >= 2")
    return Series(np.random.default_rng(seed).standard_normal(T), None, "white_noise")
