"""Segment-wise polynomial detrending and q-th order fluctuation functions.

Both profiles are cut into ``2 * (T // s)`` disjoint segments of length ``s``
(``T // s`` counted from the start, the same number from the end), an order-``m``
polynomial is removed from each segment by least squares, and the products of
the residuals are averaged per segment.  The single-series case is the
cross case with both inputs equal, and is computed by the same code path.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DegenerateDetrend, InputError, RankDeficientFit, ScaleTooLarge
from .timeseries import Profile, Series, as_series, profile

# relative power below which a detrended segment counts as fully explained
_DEGENERATE_RTOL = 1e-20
# fraction of zero segments above which a q <= 0 entry is flagged
_ZERO_SEGMENT_LIMIT = 0.01


@dataclass(frozen=True)
class SegmentationPlan:
    scale: int
    order: int = 2

    def __post_init__(self):
        if self.order < 0:
            raise InputError("polynomial order must be non-negative")
        if self.scale < self.order + 2:
            raise InputError(f"scale {self.scale} too small for order-{self.order} detrending")

    def segments_per_side(self, length: int) -> int:
        return length // self.scale

    def segment_count(self, length: int) -> int:
        return 2 * self.segments_per_side(length)


@lru_cache(maxsize=512)
def _basis(s: int, m: int) -> np.ndarray:
    """Orthonormal basis of order-m polynomials sampled on s points in [-1, 1]."""
    t = np.linspace(-1.0, 1.0, s)
    v = np.vander(t, m + 1, increasing=True)
    q, r = np.linalg.qr(v)
    d = np.abs(np.diag(r))
    if d.min() <= 1e-10 * d.max():
        raise RankDeficientFit(f"polynomial fit of order {m} on {s} points is rank deficient")
    q.setflags(write=False)
    return q


def _segments(values: np.ndarray, s: int) -> np.ndarray:
    """Stack begin-anchored then end-anchored segments, shape (2 * T // s, s)."""
    T = values.size
    n = T // s
    if n < 1:
        raise ScaleTooLarge(f"scale {s} exceeds series length {T}")
    head = values[: n * s].reshape(n, s)
    tail = values[T - n * s:].reshape(n, s)
    return np.concatenate([head, tail])


def _residuals(segs: np.ndarray, m: int) -> np.ndarray:
    q = _basis(segs.shape[-1], m)
    return segs - (segs @ q) @ q.T


def segment_residuals(values, plan: SegmentationPlan) -> np.ndarray:
    """Detrended residuals of every segment of a profile, shape (2 M_s, s)."""
    return _residuals(_segments(np.asarray(values, dtype=float), plan.scale), plan.order)


def _profile_values(p) -> np.ndarray:
    if isinstance(p, Profile):
        return p.values
    return np.asarray(p, dtype=float)


def segment_detrended_covariance(X, Y, plan: SegmentationPlan) -> np.ndarray:
    """Detrended covariance of two profiles in each of the ``2 M_s`` segments."""
    xv, yv = _profile_values(X), _profile_values(Y)
    if xv.shape != yv.shape:
        raise InputError("profiles differ in length")
    rx = _residuals(_segments(xv, plan.scale), plan.order)
    if yv is xv:
        return np.mean(rx * rx, axis=1)
    ry = _residuals(_segments(yv, plan.scale), plan.order)
    return np.mean(rx * ry, axis=1)


def default_q_values(q_min: float = -4.0, q_max: float = 4.0, q_step: float = 0.2) -> np.ndarray:
    if not q_min < q_max:
        raise InputError("q_min must be below q_max")
    if q_step <= 0:
        raise InputError("q_step must be positive")
    n = int(round((q_max - q_min) / q_step)) + 1
    q = np.round(q_min + q_step * np.arange(n), 10)
    q[np.abs(q) < 1e-9] = 0.0
    return q[q <= q_max + 1e-9]


def default_scales(length: int, s_min: int = 20, s_max: int | None = None, count: int = 30) -> np.ndarray:
    """About ``count`` log-spaced integer scales in [s_min, s_max], duplicates dropped."""
    if s_max is None:
        s_max = length // 5
    if s_max > length:
        raise ScaleTooLarge(f"s_max {s_max} exceeds series length {length}")
    if s_min < 2 or s_max < s_min:
        raise InputError(f"invalid scale range [{s_min}, {s_max}] for length {length}")
    if count < 1:
        raise InputError("scale count must be positive")
    return np.unique(np.round(np.geomspace(s_min, s_max, count)).astype(int))


@dataclass(frozen=True)
class FluctuationGrid:
    """F(q, s) on a q x s grid.

    ``moments`` holds the un-rooted sign-weighted averages (for q = 0, the
    sign-weighted mean log), from which ``F`` is derived.
    """

    q_values: np.ndarray
    scales: np.ndarray
    F: np.ndarray
    moments: np.ndarray
    kind: str
    unreliable: np.ndarray
    zero_segments: np.ndarray

    def __post_init__(self):
        if self.F.shape != (self.q_values.size, self.scales.size):
            raise InputError("grid dimensions do not match q_values x scales")

    def row(self, q: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.q_values - q)))
        if abs(self.q_values[i] - q) > 1e-9:
            raise KeyError(q)
        return self.F[i]

    def to_csv(self, path, fmt: str = "%.12g") -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["q", "s", "F"])
            for i, q in enumerate(self.q_values):
                for j, s in enumerate(self.scales):
                    w.writerow([fmt % q, int(s), fmt % self.F[i, j]])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "q": [float(q) for q in self.q_values],
            "s": [int(s) for s in self.scales],
            "F": [[float(v) for v in row] for row in self.F],
            "unreliable": [[bool(v) for v in row] for row in self.unreliable],
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def qth_order_moment(f2: np.ndarray, q: float) -> float:
    """Sign-preserving q-th order average of per-segment covariances.

    For q = 0 this is the sign-weighted mean of ``ln|f2|``.  Exact-zero
    segments are skipped whenever they would produce log(0) or 0**negative.
    """
    f2 = np.asarray(f2, dtype=float)
    if q <= 0:
        f2 = f2[f2 != 0]
        if f2.size == 0:
            return np.nan
    sign = np.sign(f2)
    if q == 0:
        return float(np.mean(sign * np.log(np.abs(f2))))
    return float(np.mean(sign * np.abs(f2) ** (q / 2.0)))


def _root(moment: float, q: float) -> float:
    if q == 0:
        return float(np.exp(0.5 * moment))
    if moment == 0:
        return 0.0
    return float(np.sign(moment) * abs(moment) ** (1.0 / q))


def _check_degenerate(f2: np.ndarray, power: float, s: int) -> None:
    if power == 0 or np.max(np.abs(f2)) <= _DEGENERATE_RTOL * power:
        raise DegenerateDetrend(f"polynomial trend absorbs the whole signal at scale {s}")


def _grid(xv: np.ndarray, yv: np.ndarray, q_values, scales, m: int, kind: str) -> FluctuationGrid:
    q_values = np.asarray(q_values, dtype=float)
    scales = np.asarray(scales, dtype=int)
    if q_values.ndim != 1 or q_values.size == 0:
        raise InputError("q_values must be a non-empty 1-d sequence")
    if scales.ndim != 1 or scales.size == 0:
        raise InputError("scales must be a non-empty 1-d sequence")
    if np.any(np.diff(q_values) <= 0) or np.any(np.diff(scales) <= 0):
        raise InputError("q_values and scales must be strictly ascending")
    power = float(np.sqrt(np.mean(xv**2) * np.mean(yv**2)))

    nq, ns = q_values.size, scales.size
    F = np.empty((nq, ns))
    moments = np.empty((nq, ns))
    unreliable = np.zeros((nq, ns), dtype=bool)
    zeros = np.zeros(ns, dtype=int)
    for j, s in enumerate(scales):
        plan = SegmentationPlan(int(s), m)
        f2 = segment_detrended_covariance(xv, yv, plan)
        _check_degenerate(f2, power, int(s))
        nzero = int(np.count_nonzero(f2 == 0))
        zeros[j] = nzero
        for i, q in enumerate(q_values):
            mom = qth_order_moment(f2, q)
            moments[i, j] = mom
            F[i, j] = _root(mom, q) if np.isfinite(mom) else np.nan
            if q <= 0 and nzero > _ZERO_SEGMENT_LIMIT * f2.size:
                unreliable[i, j] = True
    return FluctuationGrid(q_values, scales, F, moments, kind, unreliable, zeros)


def fluctuation_function_cross(x, y, q_values, scales, m: int = 2) -> FluctuationGrid:
    """Sign-preserving q-th order detrended cross-fluctuation function F_xy(q, s)."""
    x, y = as_series(x), as_series(y)
    if len(x) != len(y):
        raise InputError("series differ in length")
    if x is y:
        xv = profile(x).values
        return _grid(xv, xv, q_values, scales, m, "cross")
    return _grid(profile(x).values, profile(y).values, q_values, scales, m, "cross")


def fluctuation_function_single(x, q_values, scales, m: int = 2) -> FluctuationGrid:
    x = as_series(x)
    xv = profile(x).values
    return _grid(xv, xv, q_values, scales, m, "single")


def detrended_variance_track(x, s: int, m: int = 2, chunk: int = 1 << 22) -> Series:
    """Detrended variance of the profile in every length-``s`` window (step 1).

    Each entry is dated by the last sample of its window.
    """
    x = as_series(x)
    T = len(x)
    if s > T:
        raise ScaleTooLarge(f"window {s} exceeds series length {T}")
    SegmentationPlan(s, m)
    xv = profile(x).values
    windows = np.lib.stride_tricks.sliding_window_view(xv, s)
    basis = _basis(s, m)
    out = np.empty(windows.shape[0])
    step = max(1, chunk // s)
    for a in range(0, windows.shape[0], step):
        w = windows[a:a + step]
        r = w - (w @ basis) @ basis.T
        out[a:a + step] = np.mean(r * r, axis=1)
    _check_degenerate(out, float(np.mean(xv**2)), s)
    ts = None if x.timestamps is None else x.timestamps[s - 1:]
    return Series(out, ts, x.label)
