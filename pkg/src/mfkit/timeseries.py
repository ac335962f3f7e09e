"""Series container, returns, normalization, profiles and return-tail statistics."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DegenerateSeries, InputError, InsufficientData, NonPositivePrice


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Series:
    """A uniformly sampled real series with optional calendar dates.

    A single value is allowed (the return of a two-price series); operations
    that need more check it themselves.
    """

    values: np.ndarray
    timestamps: Optional[tuple] = None
    label: str = ""

    def __post_init__(self):
        values = _frozen(np.ravel(self.values))
        if values.size < 1:
            raise InputError(f"series {self.label!r} is empty")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise InputError(f"series {self.label!r} has a non-finite value at index {bad}")
        object.__setattr__(self, "values", values)
        if self.timestamps is not None:
            ts = tuple(self.timestamps)
            if len(ts) != values.size:
                raise InputError("timestamps and values differ in length")
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise InputError("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return self.values.size

    def replace(self, values, timestamps=None, keep_timestamps=True) -> "Series":
        if timestamps is None and keep_timestamps:
            timestamps = self.timestamps
        return Series(values, timestamps, self.label)

    def window(self, start: int, stop: int) -> "Series":
        ts = None if self.timestamps is None else self.timestamps[start:stop]
        return Series(self.values[start:stop], ts, self.label)

    @property
    def end_date(self):
        return None if self.timestamps is None else self.timestamps[-1]


def as_series(x, label: str = "", min_length: int = 1) -> Series:
    if not isinstance(x, Series):
        x = Series(np.asarray(x, dtype=float), None, label)
    if len(x) < min_length:
        raise InputError(f"series {x.label!r} needs at least {min_length} values, got {len(x)}")
    return x


@dataclass(frozen=True)
class Profile:
    values: np.ndarray
    source_mean: float

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class TailCurve:
    """Complementary CDF of absolute returns plus a power-law tail fit.

    ``fitted_exponent`` is the positive tail index (ccdf ~ x^-exponent),
    estimated on values inside ``fit_range``.
    """

    thresholds: np.ndarray
    ccdf: np.ndarray
    fitted_exponent: float
    fit_range: tuple
    fit_points: int


def log_returns(prices) -> Series:
    prices = as_series(prices, min_length=2)
    p = prices.values
    bad = np.flatnonzero(p <= 0)
    if bad.size:
        raise NonPositivePrice(bad[0], float(p[bad[0]]))
    ts = None if prices.timestamps is None else prices.timestamps[1:]
    return Series(np.diff(np.log(p)), ts, prices.label)


def normalize(x) -> Series:
    """Zero mean, unit population variance (divides by T, not T - 1)."""
    x = as_series(x, min_length=2)
    v = x.values
    centered = v - v.mean()
    sd = np.sqrt(np.mean(centered**2))
    if not sd > 0:
        raise DegenerateSeries(f"series {x.label!r} has zero variance")
    z = centered / sd
    # a second pass removes the residual rounding bias of the first
    z = z - z.mean()
    z = z / np.sqrt(np.mean(z**2))
    return x.replace(z)


def profile(x) -> Profile:
    x = as_series(x, min_length=2)
    mean = float(x.values.mean())
    return Profile(_frozen(np.cumsum(x.values - mean)), mean)


def tail_ccdf(returns, n_thresholds: int = 50, tail_fraction: float = 0.1) -> TailCurve:
    """Empirical ccdf of |returns| on log-spaced thresholds.

    The exponent is the least-squares slope of log rank-frequency against
    log |r| over the largest ``tail_fraction`` of the nonzero magnitudes.
    """
    if n_thresholds < 10:
        raise InputError("n_thresholds must be at least 10")
    if not 0 < tail_fraction <= 1:
        raise InputError("tail_fraction must lie in (0, 1]")
    a = np.abs(as_series(returns).values)
    a = np.sort(a[a > 0])
    n = a.size
    if n < 10:
        raise InsufficientData(f"only {n} nonzero values, need at least 10")
    if a[0] == a[-1]:
        raise InsufficientData("all magnitudes are equal; tail exponent undefined")

    thresholds = np.geomspace(a[0], a[-1], n_thresholds)
    # fraction of samples >= threshold
    ccdf = (n - np.searchsorted(a, thresholds, side="left")) / n

    k = max(int(round(tail_fraction * n)), 10)
    k = min(k, n)
    tail = a[n - k:]
    # rank-frequency: the i-th largest value has ccdf i/n
    freq = np.arange(k, 0, -1) / n
    keep = tail > 0
    lx, ly = np.log(tail[keep]), np.log(freq[keep])
    if np.ptp(lx) == 0:
        raise InsufficientData("tail values are all equal; tail exponent undefined")
    slope = np.polyfit(lx, ly, 1)[0]
    return TailCurve(_frozen(thresholds), _frozen(ccdf), float(-slope), (float(tail[0]), float(tail[-1])), int(k))


# --- CSV ingestion -------------------------------------------------------

def _parse_float(s: str) -> Optional[float]:
    try:
        return float(s)
    except ValueError:
        return None


def _is_date(s: str) -> bool:
    try:
        dt.date.fromisoformat(s)
    except ValueError:
        return False
    return True


def read_series_csv(path, kind: str = "auto", label: Optional[str] = None) -> tuple[Series, str]:
    """Read ``date,price`` / ``date,return`` (or single-column) CSV.

    Returns the raw series and the resolved kind (``"price"`` or ``"return"``).
    With ``kind="auto"`` a header naming a return column wins; otherwise a
    strictly positive column is taken as prices.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: empty file")

    header = None
    if _parse_float(rows[0][-1].strip()) is None:
        header = [c.strip().lower() for c in rows[0]]
        rows = rows[1:]

    if not rows:
        raise InputError(f"{path}: no data rows")
    first = rows[0][0].strip()
    has_dates = len(rows[0]) >= 2 and (
        (header is not None and header[0] in ("date", "time", "timestamp")) or _is_date(first)
    )

    width = len(header) if header is not None else len(rows[0])
    if width > 2:
        raise InputError(f"{path}: expected at most two columns, found {width}")

    dates, values = [], []
    for lineno, row in enumerate(rows, start=2 if header else 1):
        row = [c.strip() for c in row]
        if len(row) != width:
            raise InputError(f"{path}:{lineno}: expected {width} fields, found {len(row)}")
        if has_dates:
            try:
                dates.append(dt.date.fromisoformat(row[0]))
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad ISO-8601 date {row[0]!r}") from None
        v = _parse_float(row[-1]) if row[-1] else None
        if v is None or not np.isfinite(v):
            raise InputError(f"{path}:{lineno}: missing or non-numeric value {row[-1]!r}")
        values.append(v)
    if dates and len(dates) != len(values):
        raise InputError(f"{path}: some rows lack a date column")

    if kind == "auto":
        if header and "return" in header[-1]:
            kind = "return"
        elif min(values) > 0:
            kind = "price"
        else:
            kind = "return"
    if kind not in ("price", "return"):
        raise InputError(f"unknown input kind {kind!r}")
    series = Series(np.array(values), tuple(dates) or None, label or path.stem)
    return series, kind


def load_returns(path, kind: str = "auto") -> Series:
    series, kind = read_series_csv(path, kind)
    return log_returns(series) if kind == "price" else series


def write_series_csv(path, series: Series, value_name: str = "value", fmt: str = "%.12g") -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if series.timestamps is not None:
            w.writerow(["date", value_name])
            for d, v in zip(series.timestamps, series.values):
                w.writerow([d.isoformat(), fmt % v])
        else:
            w.writerow(["index", value_name])
            for i, v in enumerate(series.values):
                w.writerow([i, fmt % v])
