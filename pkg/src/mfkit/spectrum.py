"""Scaling exponents, Legendre transform and singularity-spectrum summaries."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .detrend import FluctuationGrid
from .errors import EmptyFitRange, GridMismatch, InsufficientData, NonContiguousValidity

MIN_FIT_POINTS = 5
MIN_SPECTRUM_POINTS = 5
# tolerance for the monotone-alpha and f <= 1 quality checks
_SHAPE_TOL = 1e-6
# widths below this (relative to |alpha|) are round-off of a monofractal curve
_FLAT_TOL = 1e-10


@dataclass(frozen=True)
class ScalingResult:
    """Per-q log-log fit of F(q, s) against s.

    ``exponents`` are h(q) for single-series grids and lambda_q for cross
    grids; entries where ``valid`` is false are NaN.
    """

    q_values: np.ndarray
    exponents: np.ndarray
    intercepts: np.ndarray
    fit_r2: np.ndarray
    fit_range: tuple
    valid: np.ndarray
    n_points: np.ndarray
    kind: str = "single"

    def to_csv(self, path, fmt: str = "%.12g") -> None:
        name = "h" if self.kind == "single" else "lambda"
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["q", name, "r2", "n_points", "valid"])
            for q, e, r2, n, v in zip(self.q_values, self.exponents, self.fit_r2, self.n_points, self.valid):
                w.writerow([fmt % q, fmt % e, fmt % r2, int(n), int(v)])


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    ss_tot = float(dy @ dy)
    resid = dy - slope * dx
    ss_res = float(resid @ resid)
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return slope, float(intercept), r2


def fit_scaling(grid: FluctuationGrid, fit_range: tuple | None = None) -> ScalingResult:
    """Least-squares slope of log F(q, s) on log s over ``fit_range`` (inclusive).

    Only strictly positive entries enter the fit, which matters for cross
    grids; a q with fewer than five usable scales is marked invalid.
    """
    scales = grid.scales
    if fit_range is None:
        lo, hi = int(scales[0]), int(scales[-1])
    else:
        lo = int(scales[0]) if fit_range[0] is None else fit_range[0]
        hi = int(scales[-1]) if fit_range[1] is None else fit_range[1]
    in_range = (scales >= lo) & (scales <= hi)
    if np.count_nonzero(in_range) < MIN_FIT_POINTS:
        raise EmptyFitRange(
            f"fit range [{lo}, {hi}] holds {np.count_nonzero(in_range)} scales, need {MIN_FIT_POINTS}"
        )
    logs = np.log(scales.astype(float))

    nq = grid.q_values.size
    exps = np.full(nq, np.nan)
    icpt = np.full(nq, np.nan)
    r2 = np.full(nq, np.nan)
    valid = np.zeros(nq, dtype=bool)
    npts = np.zeros(nq, dtype=int)
    for i in range(nq):
        row = grid.F[i]
        use = in_range & np.isfinite(row) & (row > 0)
        npts[i] = np.count_nonzero(use)
        if npts[i] < MIN_FIT_POINTS:
            continue
        exps[i], icpt[i], r2[i] = _ols(logs[use], np.log(row[use]))
        valid[i] = True
    return ScalingResult(grid.q_values.copy(), exps, icpt, r2, (lo, hi), valid, npts, grid.kind)


@dataclass(frozen=True)
class SingularitySpectrum:
    """Parametric curve (alpha(q), f(q)) with width and asymmetry summaries."""

    q_values: np.ndarray
    h: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray
    alpha0: float
    alpha_min: float
    alpha_max: float
    delta_alpha: float
    delta_L: float
    delta_R: float
    asymmetry: float
    hurst: float
    quality: tuple = field(default=())

    @property
    def ok(self) -> bool:
        return not self.quality

    def summary(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "alpha_min": self.alpha_min,
            "alpha_max": self.alpha_max,
            "delta_alpha": self.delta_alpha,
            "delta_L": self.delta_L,
            "delta_R": self.delta_R,
            "A": self.asymmetry,
            "H": self.hurst,
            "quality": "ok" if self.ok else ",".join(self.quality),
        }

    def to_csv(self, path, fmt: str = "%.12g") -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["q", "alpha", "f"])
            for q, a, f in zip(self.q_values, self.alpha, self.f_alpha):
                w.writerow([fmt % q, fmt % a, fmt % f])

    def to_json(self, path, fmt: str = "%.12g") -> None:
        out = {k: (float(fmt % v) if isinstance(v, float) else v) for k, v in self.summary().items()}
        Path(path).write_text(json.dumps(out, indent=1) + "\n")


def asymmetry(delta_L: float, delta_R: float) -> float:
    total = delta_L + delta_R
    return 0.0 if total == 0 else (delta_L - delta_R) / total


def _locate_maximum(alpha: np.ndarray, f: np.ndarray) -> float:
    # vertex of the parabola f(alpha) through the three points around max f
    i = int(np.argmax(f))
    if i == 0 or i == f.size - 1:
        return float(alpha[i])
    a3, f3 = alpha[i - 1:i + 2], f[i - 1:i + 2]
    if np.ptp(a3) <= _FLAT_TOL * max(1.0, float(np.max(np.abs(a3)))):
        return float(alpha[i])
    c2, c1, _ = np.polyfit(a3, f3, 2)
    if not c2 < 0:
        return float(alpha[i])
    vertex = -c1 / (2 * c2)
    return float(np.clip(vertex, a3.min(), a3.max()))


def _hurst(q: np.ndarray, h: np.ndarray) -> float:
    if q[0] <= 2 <= q[-1]:
        return float(np.interp(2.0, q, h))
    return float("nan")


def spectrum_from_curve(q, h, alpha, f) -> SingularitySpectrum:
    """Summaries for a parametric (alpha, f) curve; nothing is re-gridded."""
    q, h, alpha, f = (np.asarray(v, dtype=float) for v in (q, h, alpha, f))
    a_min, a_max = float(alpha.min()), float(alpha.max())
    a0 = min(max(_locate_maximum(alpha, f), a_min), a_max)
    dL, dR = a0 - a_min, a_max - a0
    quality = []
    scale = max(1.0, float(np.max(np.abs(alpha))))
    A = 0.0 if dL + dR <= _FLAT_TOL * scale else asymmetry(dL, dR)
    if np.any(np.diff(alpha) > _SHAPE_TOL * scale):
        quality.append("non_monotone_alpha")
    if f.max() > 1 + _SHAPE_TOL:
        quality.append("f_above_one")
    return SingularitySpectrum(
        q_values=q, h=h, alpha=alpha, f_alpha=f,
        alpha0=a0, alpha_min=a_min, alpha_max=a_max,
        delta_alpha=dL + dR, delta_L=dL, delta_R=dR,
        asymmetry=A, hurst=_hurst(q, h),
        quality=tuple(quality),
    )


def _valid_run(valid: np.ndarray) -> slice:
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        raise InsufficientData("no q with a valid scaling fit")
    if idx[-1] - idx[0] + 1 != idx.size:
        raise NonContiguousValidity("valid q values do not form a contiguous block")
    if idx.size < MIN_SPECTRUM_POINTS:
        raise InsufficientData(f"only {idx.size} valid q values, need {MIN_SPECTRUM_POINTS}")
    return slice(int(idx[0]), int(idx[-1]) + 1)


def legendre_transform(h: ScalingResult) -> SingularitySpectrum:
    """alpha = h + q h'(q), f = q (alpha - h) + 1 on the valid q block.

    h'(q) uses central differences, one-sided at the ends of the block.
    """
    run = _valid_run(np.asarray(h.valid))
    q = np.asarray(h.q_values[run], dtype=float)
    hq = np.asarray(h.exponents[run], dtype=float)
    dh = np.gradient(hq, q, edge_order=1)
    alpha = hq + q * dh
    f = q * (alpha - hq) + 1.0
    return spectrum_from_curve(q, hq, alpha, f)


def average_spectrum(spectra: Sequence[SingularitySpectrum]) -> SingularitySpectrum:
    """Pointwise-in-q mean of several spectra, summaries recomputed."""
    spectra = list(spectra)
    if not spectra:
        raise InsufficientData("no spectra to average")
    q = spectra[0].q_values
    for s in spectra[1:]:
        if s.q_values.shape != q.shape or not np.array_equal(s.q_values, q):
            raise GridMismatch("spectra are not defined on the same q grid")
    h = np.mean([s.h for s in spectra], axis=0)
    alpha = np.mean([s.alpha for s in spectra], axis=0)
    f = np.mean([s.f_alpha for s in spectra], axis=0)
    return spectrum_from_curve(q, h, alpha, f)


def tau_from_spectrum(spec: SingularitySpectrum) -> np.ndarray:
    """Recover tau(q) = q h(q) - 1 by integrating alpha = dtau/dq from q = 0.

    Independent of ``spec.h``; used to check Legendre consistency.
    """
    q, alpha = spec.q_values, spec.alpha
    i0 = int(np.argmin(np.abs(q)))
    # tau(q0) from the pointwise relation tau = q alpha - f
    tau0 = q[i0] * alpha[i0] - spec.f_alpha[i0]
    steps = np.diff(q) * 0.5 * (alpha[1:] + alpha[:-1])
    cum = np.concatenate([[0.0], np.cumsum(steps)])
    return tau0 + cum - cum[i0]
