"""Command-line front end.

Every subcommand writes plain CSV/JSON into ``--out`` together with the
fully resolved ``config.txt``.  Failures print a JSON error object on stderr
and exit with 2 (input error) or 3 (numerical degeneracy).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig, coerce
from .crosscorr import rho_q, write_rho_csv
from .detrend import detrended_variance_track
from .errors import InputError, MultifractalError
from .pipeline import mfcca, mfdfa
from .rolling import RollingPlan, composite_index, rolling_average_spectra, rolling_eigen, rolling_spectra
from .spectrum import SingularitySpectrum
from .surrogate import surrogate_spectrum
from .synth import CascadeSpec, binomial_cascade, white_noise
from .timeseries import load_returns, log_returns, read_series_csv, tail_ccdf, write_series_csv

log = logging.getLogger("mfkit")

FMT = "%.12g"

ROLLING_DEFAULTS = {"window": 5000, "step": 20}
EIGEN_DEFAULTS = {"window": 100, "step": 1}

# flag -> config key
_FLAGS = {
    "--q-min": "q_min", "--q-max": "q_max", "--q-step": "q_step",
    "--s-min": "s_min", "--s-max": "s_max", "--s-count": "s_count",
    "--order": "order", "--window": "window", "--step": "step",
    "--fit-lo": "fit_lo", "--fit-hi": "fit_hi", "--seed": "seed", "--out": "out",
    "--input-kind": "input_kind", "--jobs": "jobs",
}


def _num(v) -> float:
    return float(FMT % v)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _spectrum_summary(sp: SingularitySpectrum) -> dict:
    return {k: (_num(v) if isinstance(v, float) else v) for k, v in sp.summary().items()}


def _prepare_out(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text(include_out=False))
    return out


def _with_defaults(cfg: PipelineConfig, defaults: dict) -> PipelineConfig:
    return cfg.replace(**{k: v for k, v in defaults.items() if getattr(cfg, k) is None})


# --- subcommands ---------------------------------------------------------

def cmd_mfdfa(args, cfg: PipelineConfig) -> int:
    x = load_returns(args.input, cfg.input_kind)
    out = _prepare_out(cfg)
    res = mfdfa(x, cfg.mfdfa_params())
    res.grid.to_csv(out / "fluctuation.csv")
    res.grid.to_json(out / "fluctuation.json")
    res.scaling.to_csv(out / "hq.csv")
    res.spectrum.to_csv(out / "spectrum.csv")
    summary = _spectrum_summary(res.spectrum)
    summary["n"] = len(x)
    summary["fit_range"] = list(res.scaling.fit_range)
    try:
        tail = tail_ccdf(x, cfg.tail_thresholds, cfg.tail_fraction)
    except MultifractalError as exc:
        log.warning("tail fit skipped: %s", exc)
    else:
        with (out / "tail.csv").open("w") as fh:
            fh.write("threshold,ccdf\n")
            for t, c in zip(tail.thresholds, tail.ccdf):
                fh.write(f"{FMT % t},{FMT % c}\n")
        summary["tail_exponent"] = _num(tail.fitted_exponent)
        summary["tail_fit_range"] = [_num(v) for v in tail.fit_range]
    if len(x) >= cfg.variance_scale:
        track = detrended_variance_track(x, cfg.variance_scale, cfg.order)
        write_series_csv(out / "detrended_variance.csv", track, "variance", FMT)
    _dump_json(out / "summary.json", summary)
    return 0


def cmd_mfcca(args, cfg: PipelineConfig) -> int:
    x = load_returns(args.x, cfg.input_kind)
    y = load_returns(args.y, cfg.input_kind)
    if len(x) != len(y):
        raise InputError(f"inputs differ in length ({len(x)} vs {len(y)})")
    out = _prepare_out(cfg)
    res = mfcca(x, y, cfg.mfdfa_params())
    res.grid.to_csv(out / "cross_fluctuation.csv")
    res.grid.to_json(out / "cross_fluctuation.json")
    res.scaling.to_csv(out / "lambda.csv")
    sc = res.scaling
    _dump_json(out / "summary.json", {
        "n": len(x),
        "fit_range": list(sc.fit_range),
        "valid_q": [_num(q) for q in sc.q_values[sc.valid]],
        "invalid_q": [_num(q) for q in sc.q_values[~sc.valid]],
    })
    return 0


def cmd_rho(args, cfg: PipelineConfig) -> int:
    x = load_returns(args.x, cfg.input_kind)
    y = load_returns(args.y, cfg.input_kind)
    if len(x) != len(y):
        raise InputError(f"inputs differ in length ({len(x)} vs {len(y)})")
    params = cfg.mfdfa_params()
    scales = params.scales(len(x))
    out = _prepare_out(cfg)
    results = [rho_q(x, y, q, scales, cfg.order) for q in params.q_values() if q != 0]
    write_rho_csv(out / "rho.csv", results, FMT)
    return 0


def cmd_rolling(args, cfg: PipelineConfig) -> int:
    cfg = _with_defaults(cfg, ROLLING_DEFAULTS)
    plan = RollingPlan(cfg.window, cfg.step)
    params = cfg.mfdfa_params()
    if len(args.inputs) == 1:
        x = load_returns(args.inputs[0], cfg.input_kind)
        out = _prepare_out(cfg)
        _write_track(out, "", rolling_spectra(x, plan, params, cfg.jobs))
        return 0
    # index versus components: composite of prices plus the mean component spectrum
    raw = [read_series_csv(p, cfg.input_kind) for p in args.inputs]
    if any(kind != "price" for _, kind in raw):
        raise InputError("multi-input rolling needs price series to build the composite index")
    prices = [s for s, _ in raw]
    index = log_returns(composite_index(prices))
    comps = [log_returns(p) for p in prices]
    out = _prepare_out(cfg)
    _write_track(out, "index_", rolling_spectra(index, plan, params, cfg.jobs))
    _write_track(out, "average_", rolling_average_spectra(comps, plan, params, cfg.jobs))
    return 0


def _write_track(out: Path, prefix: str, track) -> None:
    track.write_long_csv(out / f"{prefix}spectra_long.csv", FMT)
    track.write_summary_csv(out / f"{prefix}summary.csv", FMT)
    track.write_projection_csv(out / f"{prefix}projection.csv", FMT)


def cmd_eigen(args, cfg: PipelineConfig) -> int:
    cfg = _with_defaults(cfg, EIGEN_DEFAULTS)
    series = [load_returns(p, cfg.input_kind) for p in args.inputs]
    track = rolling_eigen(series, cfg.window, cfg.step, cfg.rho_q, cfg.rho_scale, cfg.order)
    out = _prepare_out(cfg)
    track.to_csv(out / "eigen.csv", FMT)
    return 0


def cmd_surrogate(args, cfg: PipelineConfig) -> int:
    x = load_returns(args.input, cfg.input_kind)
    params = cfg.mfdfa_params()
    out = _prepare_out(cfg)
    original = mfdfa(x, params).spectrum
    original.to_csv(out / "spectrum_original.csv")
    summary = {"original": _spectrum_summary(original)}
    for spec in cfg.surrogate_specs():
        sp = surrogate_spectrum(x, spec, params)
        sp.to_csv(out / f"spectrum_{spec.kind}.csv")
        entry = _spectrum_summary(sp)
        entry["realizations"] = spec.realizations
        entry["width_ratio"] = _num(sp.delta_alpha / original.delta_alpha) if original.delta_alpha else None
        summary[spec.kind] = entry
    _dump_json(out / "summary.json", summary)
    return 0


def cmd_synth(args, cfg: PipelineConfig) -> int:
    if args.model == "cascade":
        seed = None if args.deterministic else cfg.seed
        spec = CascadeSpec(args.p, args.levels, seed, random_signs=args.random_signs)
        series = binomial_cascade(spec)
    else:
        series = white_noise(args.length, cfg.seed)
    out = _prepare_out(cfg)
    write_series_csv(out / "series.csv", series, "return", FMT)
    return 0


# --- argument parsing ----------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key = value config file")
    for flag, key in _FLAGS.items():
        p.add_argument(flag, dest=key, default=argparse.SUPPRESS, metavar=key.upper())
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="mfkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mfdfa", parents=[common], help="singularity spectrum of one series")
    p.add_argument("input")
    p.add_argument("--tail-fraction", dest="tail_fraction", default=argparse.SUPPRESS)
    p.add_argument("--variance-scale", dest="variance_scale", default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_mfdfa)

    p = sub.add_parser("mfcca", parents=[common], help="cross-correlation fluctuation functions")
    p.add_argument("x")
    p.add_argument("y")
    p.set_defaults(func=cmd_mfcca)

    p = sub.add_parser("rho", parents=[common], help="q-dependent detrended cross-correlation coefficient")
    p.add_argument("x")
    p.add_argument("y")
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("rolling", parents=[common], help="rolling-window spectra")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_rolling)

    p = sub.add_parser("eigen", parents=[common], help="rolling largest eigenvalues of correlation matrices")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--rho-q", dest="rho_q", default=argparse.SUPPRESS)
    p.add_argument("--rho-scale", dest="rho_scale", default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("surrogate", parents=[common], help="surrogate-averaged spectra")
    p.add_argument("input")
    p.add_argument("--surrogate-kind", dest="surrogate_kind", default=argparse.SUPPRESS)
    p.add_argument("--realizations", dest="realizations", default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_surrogate)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic series")
    p.add_argument("model", choices=("cascade", "noise"))
    p.add_argument("--p", type=float, default=0.6)
    p.add_argument("--levels", type=int, default=16)
    p.add_argument("--length", type=int, default=2**14)
    p.add_argument("--deterministic", action="store_true", help="cascade without seeded placement")
    p.add_argument("--random-signs", action="store_true")
    p.set_defaults(func=cmd_synth)
    return parser


_CONFIG_KEYS = set(PipelineConfig.__dataclass_fields__)


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg = PipelineConfig.load(args.config, cfg)
    overrides = {k: coerce(k, str(v)) for k, v in vars(args).items() if k in _CONFIG_KEYS}
    return cfg.replace(**overrides)


def _error(exc: MultifractalError) -> int:
    payload = {"error": exc.code, "type": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return exc.exit_status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except MultifractalError as exc:
        return _error(exc)
    except OSError as exc:
        return _error(InputError(str(exc)))


if __name__ == "__main__":
    sys.exit(main())
