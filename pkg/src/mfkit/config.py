"""Pipeline configuration: flat ``key = value`` text with CLI overrides.

Precedence is command-line flags over config file over built-in defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, get_type_hints

from .errors import InputError
from .pipeline import MFDFAParams
from .surrogate import KINDS, SurrogateSpec


@dataclass(frozen=True)
class PipelineConfig:
    q_min: float = -4.0
    q_max: float = 4.0
    q_step: float = 0.2
    s_min: int = 20
    s_max: Optional[int] = None
    s_count: int = 30
    order: int = 2
    window: Optional[int] = None
    step: Optional[int] = None
    fit_lo: Optional[int] = None
    fit_hi: Optional[int] = None
    seed: int = 0
    out: str = "out"
    input_kind: str = "auto"
    surrogate_kind: str = "all"
    realizations: int = 10
    rho_q: float = 2.0
    rho_scale: int = 100
    tail_fraction: float = 0.1
    tail_thresholds: int = 50
    variance_scale: int = 500
    jobs: int = 1

    def __post_init__(self):
        if not self.q_min < self.q_max:
            raise InputError("q_min must be below q_max")
        if self.q_step <= 0:
            raise InputError("q_step must be positive")
        positive = ("s_min", "s_count", "realizations", "rho_scale", "tail_thresholds", "variance_scale", "jobs")
        for name in positive:
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")
        for name in ("s_max", "window", "step", "fit_lo", "fit_hi"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise InputError(f"{name} must be positive")
        if self.order < 0:
            raise InputError("order must be non-negative")
        if self.input_kind not in ("auto", "price", "return"):
            raise InputError(f"input_kind must be auto, price or return, not {self.input_kind!r}")
        if self.surrogate_kind not in KINDS + ("all",):
            raise InputError(f"unknown surrogate kind {self.surrogate_kind!r}")

    def mfdfa_params(self) -> MFDFAParams:
        return MFDFAParams(
            q_min=self.q_min, q_max=self.q_max, q_step=self.q_step,
            s_min=self.s_min, s_max=self.s_max, s_count=self.s_count,
            order=self.order, fit_lo=self.fit_lo, fit_hi=self.fit_hi,
        )

    def surrogate_specs(self) -> list[SurrogateSpec]:
        kinds = KINDS if self.surrogate_kind == "all" else (self.surrogate_kind,)
        return [SurrogateSpec(k, self.realizations, self.seed) for k in kinds]

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    # --- text format ---

    def to_text(self, include_out: bool = True) -> str:
        lines = []
        for f in dataclasses.fields(self):
            if f.name == "out" and not include_out:
                continue
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: Optional["PipelineConfig"] = None) -> "PipelineConfig":
        return (base or cls()).replace(**parse_text(text))

    @classmethod
    def load(cls, path, base: Optional["PipelineConfig"] = None) -> "PipelineConfig":
        path = Path(path)
        if not path.is_file():
            raise InputError(f"config file not found: {path}")
        return cls.from_text(path.read_text(), base)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


def _format(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_HINTS = get_type_hints(PipelineConfig)


def coerce(name: str, raw: str):
    if name not in _HINTS:
        raise InputError(f"unknown config key {name!r}")
    hint = _HINTS[name]
    optional = getattr(hint, "__args__", None) is not None and type(None) in hint.__args__
    base = next(t for t in hint.__args__ if t is not type(None)) if optional else hint
    raw = raw.strip()
    if optional and raw.lower() in ("none", ""):
        return None
    try:
        if base is int:
            return int(raw)
        if base is float:
            return float(raw)
    except ValueError:
        raise InputError(f"config key {name}: cannot parse {raw!r} as {base.__name__}") from None
    return raw


def parse_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = coerce(key, value)
    return out
