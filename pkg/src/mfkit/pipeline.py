"""End-to-end MFDFA / MFCCA runs with shared parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .detrend import (
    FluctuationGrid,
    default_q_values,
    default_scales,
    fluctuation_function_cross,
    fluctuation_function_single,
)
from .spectrum import ScalingResult, SingularitySpectrum, fit_scaling, legendre_transform
from .timeseries import as_series, normalize


@dataclass(frozen=True)
class MFDFAParams:
    q_min: float = -4.0
    q_max: float = 4.0
    q_step: float = 0.2
    s_min: int = 20
    s_max: Optional[int] = None  # None: a fifth of the series length
    s_count: int = 30
    order: int = 2
    fit_lo: Optional[int] = None
    fit_hi: Optional[int] = None
    normalize: bool = True

    def q_values(self) -> np.ndarray:
        return default_q_values(self.q_min, self.q_max, self.q_step)

    def scales(self, length: int) -> np.ndarray:
        return default_scales(length, self.s_min, self.s_max, self.s_count)

    @property
    def fit_range(self):
        if self.fit_lo is None and self.fit_hi is None:
            return None
        return (self.fit_lo, self.fit_hi)


@dataclass(frozen=True)
class MFDFAResult:
    grid: FluctuationGrid
    scaling: ScalingResult
    spectrum: SingularitySpectrum


@dataclass(frozen=True)
class MFCCAResult:
    grid: FluctuationGrid
    scaling: ScalingResult


def _prep(x, params: MFDFAParams):
    x = as_series(x)
    return normalize(x) if params.normalize else x


def mfdfa(x, params: MFDFAParams = MFDFAParams()) -> MFDFAResult:
    x = _prep(x, params)
    grid = fluctuation_function_single(x, params.q_values(), params.scales(len(x)), params.order)
    scaling = fit_scaling(grid, params.fit_range)
    return MFDFAResult(grid, scaling, legendre_transform(scaling))


def mfcca(x, y, params: MFDFAParams = MFDFAParams()) -> MFCCAResult:
    x, y = _prep(x, params), _prep(y, params)
    grid = fluctuation_function_cross(x, y, params.q_values(), params.scales(len(x)), params.order)
    return MFCCAResult(grid, fit_scaling(grid, params.fit_range))
