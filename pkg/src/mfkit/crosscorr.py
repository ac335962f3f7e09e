"""q-dependent detrended cross-correlation and correlation-matrix spectra."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .detrend import _DEGENERATE_RTOL, SegmentationPlan, qth_order_moment, segment_residuals
from .errors import AlignmentError, DegenerateSeries, InputError, ZeroDenominator
from .timeseries import as_series, profile


@dataclass(frozen=True)
class RhoQResult:
    q: float
    scales: np.ndarray
    rho: np.ndarray

    @property
    def unbounded(self) -> bool:
        # only q = 2 is guaranteed to stay inside [-1, 1]
        return self.q < 0


@dataclass(frozen=True)
class CorrelationMatrixResult:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mp_lower: float
    mp_upper: float
    Q: float
    sigma2: float = 1.0

    @property
    def largest(self) -> float:
        return float(self.eigenvalues[0])


def mp_bounds(T: int, N: int, sigma2: float = 1.0) -> tuple[float, float]:
    """Marchenko-Pastur support (lower, upper) for Q = T/N random series."""
    if T < N:
        raise InputError(f"need T >= N for the Marchenko-Pastur bounds (T={T}, N={N})")
    inv_q = N / T
    root = np.sqrt(inv_q)
    return sigma2 * (1 + inv_q - 2 * root), sigma2 * (1 + inv_q + 2 * root)


def _residual_stack(x: np.ndarray, plan: SegmentationPlan) -> np.ndarray:
    return segment_residuals(profile(x).values, plan)


def _vanishes(f2: np.ndarray, x: np.ndarray) -> bool:
    # residual power at round-off level relative to the profile counts as zero
    P = profile(x).values
    return not np.max(f2) > _DEGENERATE_RTOL * float(np.mean(P * P))


def rho_q(x, y, q: float, scales, m: int = 2) -> RhoQResult:
    """rho_q(s) = F_xy^q(s) / sqrt(F_xx^q(s) F_yy^q(s)) on un-rooted moments."""
    if q == 0:
        raise InputError("rho_q is undefined for q = 0")
    x, y = as_series(x), as_series(y)
    if len(x) != len(y):
        raise InputError("series differ in length")
    scales = np.asarray(scales, dtype=int)
    rho = np.empty(scales.size)
    for j, s in enumerate(scales):
        plan = SegmentationPlan(int(s), m)
        rx = _residual_stack(x.values, plan)
        ry = _residual_stack(y.values, plan)
        f2x, f2y = np.mean(rx * rx, axis=1), np.mean(ry * ry, axis=1)
        if _vanishes(f2x, x.values) or _vanishes(f2y, y.values):
            raise ZeroDenominator(int(s))
        fxy = qth_order_moment(np.mean(rx * ry, axis=1), q)
        fxx = qth_order_moment(f2x, q)
        fyy = qth_order_moment(f2y, q)
        if not (fxx > 0 and fyy > 0):
            raise ZeroDenominator(int(s))
        rho[j] = fxy / np.sqrt(fxx * fyy)
    return RhoQResult(float(q), scales, rho)


def _stack(series: Sequence, window: int | None) -> np.ndarray:
    rows = [as_series(s).values for s in series]
    if len(rows) < 2:
        raise InputError("need at least two series")
    T = rows[0].size
    if any(r.size != T for r in rows):
        raise AlignmentError("series differ in length")
    M = np.vstack(rows)
    if window is not None:
        if not 2 <= window <= T:
            raise InputError(f"window {window} outside [2, {T}]")
        M = M[:, T - window:]
    return M


def _eigen(C: np.ndarray, T: int) -> CorrelationMatrixResult:
    N = C.shape[0]
    vals, vecs = np.linalg.eigh(C)
    order = np.argsort(vals)[::-1]
    lo, hi = mp_bounds(T, N)
    return CorrelationMatrixResult(C, vals[order], vecs[:, order], lo, hi, T / N)


def pearson_matrix(series: Sequence, window: int | None = None) -> CorrelationMatrixResult:
    """C = M M^T / T on rows standardized inside the (trailing) window."""
    M = _stack(series, window)
    N, T = M.shape
    if T < N:
        raise InputError(f"window length {T} below number of series {N}")
    Z = M - M.mean(axis=1, keepdims=True)
    sd = np.sqrt(np.mean(Z * Z, axis=1))
    if np.any(sd == 0):
        raise DegenerateSeries(f"series {int(np.flatnonzero(sd == 0)[0])} is constant in the window")
    Z = Z / sd[:, None]
    C = Z @ Z.T / T
    C = 0.5 * (C + C.T)
    np.fill_diagonal(C, 1.0)
    return _eigen(C, T)


def rho_matrix(series: Sequence, q: float, s: int, window: int | None = None, m: int = 2) -> np.ndarray:
    if q == 0:
        raise InputError("rho_q is undefined for q = 0")
    M = _stack(series, window)
    N, T = M.shape
    if s > T:
        raise InputError(f"scale {s} exceeds window length {T}")
    plan = SegmentationPlan(int(s), m)
    R = np.stack([_residual_stack(row, plan) for row in M])  # (N, segments, s)
    f2 = np.einsum("aks,bks->abk", R, R) / s
    for a in range(N):
        if _vanishes(f2[a, a], M[a]):
            raise ZeroDenominator(int(s))
    mom = np.empty((N, N))
    for a in range(N):
        for b in range(a, N):
            mom[a, b] = mom[b, a] = qth_order_moment(f2[a, b], q)
    diag = np.diag(mom).copy()
    bad = np.flatnonzero(~(diag > 0))
    if bad.size:
        raise ZeroDenominator(int(s))
    rho = mom / np.sqrt(np.outer(diag, diag))
    np.fill_diagonal(rho, 1.0)
    return rho


def rho_matrix_eigen(series: Sequence, q: float = 2.0, s: int = 100, window: int | None = None,
                     m: int = 2) -> CorrelationMatrixResult:
    """Eigen-decomposition of the matrix of pairwise rho_q(s).

    The largest eigenvalue is the gamma_1 statistic.  MP bounds are filled in
    for reference only; this matrix need not follow that law.
    """
    rho = rho_matrix(series, q, s, window, m)
    T = window if window is not None else as_series(series[0]).values.size
    return _eigen(rho, T)


def write_rho_csv(path, results: Sequence[RhoQResult], fmt: str = "%.12g") -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "s", "rho", "regime"])
        for r in results:
            regime = "unbounded" if r.unbounded else "bounded"
            for s, v in zip(r.scales, r.rho):
                w.writerow([fmt % r.q, int(s), fmt % v, regime])
