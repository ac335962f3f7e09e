import csv
import filecmp
import json
import subprocess
import sys

import numpy as np
import pytest

from mfkit.cli import main
from mfkit.config import PipelineConfig, parse_text
from mfkit.errors import InputError
from mfkit.timeseries import Series, write_series_csv

FAST = ["--q-min", "-2", "--q-max", "2", "--q-step", "0.5", "--s-count", "10"]


def rows(path):
    return list(csv.DictReader(path.open()))


@pytest.fixture
def noise_csv(tmp_path, rng):
    p = tmp_path / "x.csv"
    write_series_csv(p, Series(rng.standard_t(4, 3000)), "return")
    return p


def test_config_roundtrip():
    cfg = PipelineConfig(q_min=-3.0, s_max=400, window=1000, out="somewhere")
    assert PipelineConfig.from_text(cfg.to_text()) == cfg
    assert "out" not in cfg.to_text(include_out=False)


def test_config_parse_and_reject():
    assert parse_text("# comment\nq-min = -2   # trailing\n\norder=1\ns_max = none\n") == {
        "q_min": -2.0, "order": 1, "s_max": None}
    for bad in ("order = two", "bogus = 1", "just words", "q_min = 3\nq_max = 1"):
        with pytest.raises(InputError):
            PipelineConfig.from_text(bad)


def test_config_load_missing(tmp_path):
    with pytest.raises(InputError):
        PipelineConfig.load(tmp_path / "none.txt")


def test_precedence_flags_over_file_over_defaults(tmp_path, noise_csv):
    cfg = tmp_path / "c.txt"
    cfg.write_text("q_min = -3\nq_max = 3\nq_step = 1\norder = 1\n")
    out = tmp_path / "o"
    assert main(["mfdfa", str(noise_csv), "--config", str(cfg), "--order", "3", "--out", str(out)]) == 0
    echoed = PipelineConfig.from_text((out / "config.txt").read_text())
    assert echoed.order == 3 and echoed.q_min == -3.0 and echoed.s_min == 20
    assert [float(r["q"]) for r in rows(out / "hq.csv")] == [-3, -2, -1, 0, 1, 2, 3]


def test_mfdfa_outputs(tmp_path, noise_csv):
    out = tmp_path / "o"
    assert main(["mfdfa", str(noise_csv), "--out", str(out), "--variance-scale", "300", *FAST]) == 0
    for name in ("fluctuation.csv", "fluctuation.json", "hq.csv", "spectrum.csv", "summary.json",
                 "tail.csv", "detrended_variance.csv", "config.txt"):
        assert (out / name).is_file(), name
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n"] == 3000 and summary["quality"] in ("ok", "non_monotone_alpha", "f_above_one",
                                                             "non_monotone_alpha,f_above_one")
    assert summary["tail_exponent"] > 2
    assert len(rows(out / "detrended_variance.csv")) == 3000 - 300 + 1


def test_identical_output_trees(tmp_path, noise_csv):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["mfdfa", str(noise_csv), "--out", str(d), *FAST]) == 0
    cmp = filecmp.dircmp(a, b)
    assert not cmp.left_only and not cmp.right_only
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    assert not mismatch and not errors


def test_mfcca_self_equals_mfdfa(tmp_path, noise_csv):
    o1, o2 = tmp_path / "c", tmp_path / "d"
    assert main(["mfcca", str(noise_csv), str(noise_csv), "--out", str(o1), *FAST]) == 0
    assert main(["mfdfa", str(noise_csv), "--out", str(o2), *FAST]) == 0
    lam = [float(r["lambda"]) for r in rows(o1 / "lambda.csv")]
    h = [float(r["h"]) for r in rows(o2 / "hq.csv")]
    np.testing.assert_allclose(lam, h, rtol=1e-9)
    assert json.loads((o1 / "summary.json").read_text())["invalid_q"] == []


def test_mfcca_independent_noise_flags_negative_q(tmp_path, rng):
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    write_series_csv(x, Series(rng.standard_normal(5000)), "return")
    write_series_csv(y, Series(rng.standard_normal(5000)), "return")
    out = tmp_path / "o"
    assert main(["mfcca", str(x), str(y), "--out", str(out), *FAST]) == 0
    s = json.loads((out / "summary.json").read_text())
    assert len(s["invalid_q"]) > 0
    assert all(r["valid"] in ("0", "1") for r in rows(out / "lambda.csv"))


def test_rho_command(tmp_path, noise_csv):
    out = tmp_path / "o"
    assert main(["rho", str(noise_csv), str(noise_csv), "--out", str(out), *FAST]) == 0
    rr = rows(out / "rho.csv")
    assert {float(r["q"]) for r in rr} == {-2, -1.5, -1, -0.5, 0.5, 1, 1.5, 2}
    np.testing.assert_allclose([float(r["rho"]) for r in rr], 1.0, rtol=1e-12)


def test_rolling_single_and_composite(tmp_path, rng):
    out = tmp_path / "o"
    r = tmp_path / "r.csv"
    write_series_csv(r, Series(rng.standard_normal(1200)), "return")
    assert main(["rolling", str(r), "--window", "1000", "--step", "100", "--out", str(out), *FAST]) == 0
    assert len(rows(out / "summary.csv")) == 3
    assert len(rows(out / "projection.csv")) == 3
    prices = []
    for k in range(3):
        p = tmp_path / f"p{k}.csv"
        write_series_csv(p, Series(100 * np.exp(np.cumsum(0.01 * rng.standard_normal(1201)))), "price")
        prices.append(str(p))
    out2 = tmp_path / "o2"
    assert main(["rolling", *prices, "--window", "1000", "--step", "100", "--out", str(out2), *FAST]) == 0
    assert len(rows(out2 / "index_summary.csv")) == 3
    assert len(rows(out2 / "average_summary.csv")) == 3


def test_rolling_defaults_echoed(tmp_path, rng):
    r = tmp_path / "r.csv"
    write_series_csv(r, Series(rng.standard_normal(5000)), "return")
    out = tmp_path / "o"
    assert main(["rolling", str(r), "--out", str(out), *FAST]) == 0
    cfg = PipelineConfig.from_text((out / "config.txt").read_text())
    assert (cfg.window, cfg.step) == (5000, 20)
    assert len(rows(out / "summary.csv")) == 1


def test_eigen_command(tmp_path, rng):
    paths = []
    for k in range(4):
        p = tmp_path / f"e{k}.csv"
        write_series_csv(p, Series(rng.standard_normal(130)), "return")
        paths.append(str(p))
    out = tmp_path / "o"
    assert main(["eigen", *paths, "--out", str(out), "--step", "10"]) == 0
    er = rows(out / "eigen.csv")
    assert len(er) == 4
    assert er[0]["mp_upper"] == "1.44" and er[0]["mp_lower"] == "0.64"


def test_surrogate_command(tmp_path, noise_csv):
    out = tmp_path / "o"
    assert main(["surrogate", str(noise_csv), "--realizations", "2", "--out", str(out), *FAST]) == 0
    s = json.loads((out / "summary.json").read_text())
    assert set(s) == {"original", "shuffle", "phase_randomized", "gaussianized"}
    assert s["shuffle"]["realizations"] == 2 and s["shuffle"]["width_ratio"] > 0
    out2 = tmp_path / "o2"
    assert main(["surrogate", str(noise_csv), "--surrogate-kind", "shuffle", "--realizations", "1",
                 "--out", str(out2), *FAST]) == 0
    assert not (out2 / "spectrum_gaussianized.csv").exists()


def test_synth_command(tmp_path):
    out = tmp_path / "o"
    assert main(["synth", "cascade", "--levels", "10", "--out", str(out)]) == 0
    vals = [float(r["return"]) for r in rows(out / "series.csv")]
    assert len(vals) == 1024 and sum(vals) == pytest.approx(1.0, abs=1e-9)
    out2 = tmp_path / "o2"
    assert main(["synth", "noise", "--length", "500", "--seed", "3", "--out", str(out2)]) == 0
    assert len(rows(out2 / "series.csv")) == 500


def test_input_error_exit_code(tmp_path, capsys):
    assert main(["mfdfa", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "E_INPUT"
    bad = tmp_path / "neg.csv"
    bad.write_text("date,price\n2020-01-01,10\n2020-01-02,-1\n2020-01-03,5\n")
    assert main(["mfdfa", str(bad), "--input-kind", "price", "--out", str(tmp_path / "o")]) == 2
    assert main(["mfdfa", str(bad), "--q-min", "abc"]) == 2


def test_degenerate_exit_code(tmp_path, capsys):
    p = tmp_path / "flat.csv"
    write_series_csv(p, Series(np.full(500, 0.01)), "return")
    assert main(["mfdfa", str(p), "--out", str(tmp_path / "o")]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "E_DEGENERATE"


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mfkit", "synth", "noise", "--length", "50",
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "o" / "series.csv").is_file()
