import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfkit.detrend import (
    SegmentationPlan,
    default_q_values,
    default_scales,
    detrended_variance_track,
    fluctuation_function_cross,
    fluctuation_function_single,
    qth_order_moment,
    segment_detrended_covariance,
)
from mfkit.errors import DegenerateDetrend, InputError, ScaleTooLarge
from mfkit.timeseries import Series, profile
from oracles import naive_fluctuation, naive_profile, naive_segment_f2


def test_plan_invariants():
    assert SegmentationPlan(10, 2).segment_count(45) == 8
    with pytest.raises(InputError):
        SegmentationPlan(3, 2)
    SegmentationPlan(4, 2)


def test_scale_too_large():
    X = profile(np.arange(10.0) % 3)
    with pytest.raises(ScaleTooLarge):
        segment_detrended_covariance(X, X, SegmentationPlan(11, 1))


def test_segment_covariance_self_is_nonnegative(rng):
    X = profile(rng.normal(size=200))
    f2 = segment_detrended_covariance(X, X, SegmentationPlan(16, 2))
    assert f2.size == 2 * (200 // 16)
    assert np.all(f2 >= 0)


def test_segment_covariance_bilinear(rng):
    x = rng.normal(size=150)
    X, Xn = profile(x), profile(-x)
    plan = SegmentationPlan(12, 2)
    same = segment_detrended_covariance(X, X, plan)
    neg = segment_detrended_covariance(X, Xn, plan)
    np.testing.assert_array_equal(neg, -same)


def test_segment_covariance_matches_naive(rng):
    x, y = rng.normal(size=40), rng.normal(size=40)
    got = segment_detrended_covariance(profile(x), profile(y), SegmentationPlan(10, 2))
    want = naive_segment_f2(naive_profile(x), naive_profile(y), 10, 2)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-14)


def test_uneven_length_double_covers(rng):
    # T = 45, s = 10: head covers 0..39, tail covers 5..44
    x, y = rng.normal(size=45), rng.normal(size=45)
    got = segment_detrended_covariance(profile(x), profile(y), SegmentationPlan(10, 1))
    want = naive_segment_f2(naive_profile(x), naive_profile(y), 10, 1)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_single_grid_matches_naive(rng, m):
    x = rng.normal(size=64)
    q = [-2.0, 0.0, 2.0]
    g = fluctuation_function_single(x, q, [8, 16], m)
    np.testing.assert_allclose(g.F, naive_fluctuation(x, x, q, [8, 16], m), rtol=1e-10)
    assert g.kind == "single" and g.F.shape == (3, 2)
    assert np.all(g.F > 0)


def test_cross_grid_matches_naive(rng):
    x = rng.normal(size=64)
    y = 0.5 * x + rng.normal(size=64)
    q = [-2.0, -0.5, 0.0, 0.5, 2.0]
    g = fluctuation_function_cross(x, y, q, [8, 16], 2)
    np.testing.assert_allclose(g.F, naive_fluctuation(x, y, q, [8, 16], 2), rtol=1e-10)


def test_cross_equals_single_when_identical(rng):
    x = rng.normal(size=500)
    q = default_q_values()
    sc = [10, 20, 40, 80]
    np.testing.assert_allclose(
        fluctuation_function_cross(x, x.copy(), q, sc).F,
        fluctuation_function_single(x, q, sc).F,
        rtol=1e-12,
    )


def test_cross_with_negation_flips_sign(rng):
    x = rng.normal(size=500)
    q = default_q_values()
    sc = [10, 20, 40]
    pos = fluctuation_function_cross(x, x, q, sc).F
    neg = fluctuation_function_cross(x, -x, q, sc).F
    nz = q != 0
    np.testing.assert_allclose(neg[nz], -pos[nz], rtol=1e-12)
    # q = 0: sign-weighted log-mean flips, so exp(-a/2) = 1 / exp(a/2)
    np.testing.assert_allclose(neg[~nz], 1 / pos[~nz], rtol=1e-12)


def test_independent_noise_cross_is_small():
    rng = np.random.default_rng(77)
    T = 2**14
    sc = default_scales(T)
    nseg = 2 * (T // sc)
    ratio, rooted = [], []
    for _ in range(20):
        x, y = rng.standard_normal(T), rng.standard_normal(T)
        gxy = fluctuation_function_cross(x, y, [2.0], sc)
        gxx = fluctuation_function_single(x, [2.0], sc)
        ratio.append(np.abs(gxy.moments[0]) / gxx.moments[0])
        rooted.append(np.abs(gxy.F[0]) / gxx.F[0])
    # Monte-Carlo reference: mean ratio ~ 0.35 / sqrt(2 M_s)
    assert np.all(np.mean(ratio, axis=0) < 1 / np.sqrt(nseg))
    assert np.all(np.mean(rooted, axis=0) < 0.5)


def test_perfect_trend_is_degenerate():
    with pytest.raises(DegenerateDetrend):
        fluctuation_function_single(np.linspace(1, 2, 256), [2.0], [16, 32], 2)
    with pytest.raises(DegenerateDetrend):
        fluctuation_function_single(np.full(256, 3.0), [2.0], [16, 32], 2)


def test_power_mean_monotone_in_q(rng):
    x = rng.standard_t(3, size=2000)
    g = fluctuation_function_single(x, default_q_values(), default_scales(2000))
    assert np.all(np.diff(g.F, axis=0) >= -1e-12 * g.F[1:])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3), st.sampled_from([-1.0, 1.0]))
def test_scaling_covariance(seed, a, sign):
    x = np.random.default_rng(seed).normal(size=300)
    q = [-3.0, -1.0, 0.0, 1.0, 3.0]
    base = fluctuation_function_single(x, q, [10, 30, 60]).F
    scaled = fluctuation_function_single(sign * a * x, q, [10, 30, 60]).F
    np.testing.assert_allclose(scaled, a * base, rtol=1e-9)


@pytest.mark.parametrize("T, s", [(400, 20), (403, 20), (401, 37)])
def test_profile_reversal_permutes_segments(rng, T, s):
    # reversing the profile swaps the head and tail segment sets
    X = profile(rng.normal(size=T)).values
    plan = SegmentationPlan(s, 2)
    fwd = segment_detrended_covariance(X, X, plan)
    rev = segment_detrended_covariance(X[::-1].copy(), X[::-1].copy(), plan)
    np.testing.assert_allclose(np.sort(rev), np.sort(fwd), rtol=1e-10)
    for q in (-4.0, 0.0, 2.0, 4.0):
        assert qth_order_moment(rev, q) == pytest.approx(qth_order_moment(fwd, q), rel=1e-10)


def test_zero_segments_excluded_and_flagged():
    # the profile is flat over samples 200..239, so that s = 40 segment is exactly zero
    x = np.zeros(400)
    x[::40] = 1.0
    x[5::40] = -1.0
    x[200:240] = 0.0
    g = fluctuation_function_single(x, [-2.0, 0.0, 2.0], [20, 40])
    assert np.all(np.isfinite(g.F))
    assert g.zero_segments[1] > 0
    assert g.unreliable[0, 1] and g.unreliable[1, 1] and not g.unreliable[2, 1]


def test_default_grids():
    q = default_q_values()
    assert q.size == 41 and q[0] == -4.0 and q[-1] == 4.0 and 0.0 in q
    np.testing.assert_allclose(np.diff(q), 0.2)
    sc = default_scales(5000)
    assert sc[0] == 20 and sc[-1] == 1000
    assert 25 <= sc.size <= 30 and np.all(np.diff(sc) > 0)
    with pytest.raises(InputError):
        default_q_values(1, -1)


def test_variance_track_basic(rng):
    x = rng.standard_normal(3000)
    tr = detrended_variance_track(x, 500, 2)
    assert len(tr) == 3000 - 500 + 1
    # Monte-Carlo reference: mean level ~21.6 over 10 seeds (m = 2, s = 500)
    assert 15 < tr.values.mean() < 30
    np.testing.assert_allclose(detrended_variance_track(3 * x, 500, 2).values, 9 * tr.values, rtol=1e-10)


def test_variance_track_matches_segment_covariance(rng):
    x = rng.standard_normal(300)
    tr = detrended_variance_track(x, 100, 2)
    for start in (0, 57, 200):
        w = x[start:start + 100]
        Pw = profile(w)
        want = segment_detrended_covariance(Pw, Pw, SegmentationPlan(100, 2))
        assert want.size == 2 and want[0] == pytest.approx(want[1])
        assert tr.values[start] == pytest.approx(want[0], rel=1e-9)


def test_variance_track_dates_and_errors():
    import datetime as dt

    days = tuple(dt.date(2000, 1, 1) + dt.timedelta(i) for i in range(50))
    x = Series(np.random.default_rng(0).normal(size=50), days)
    tr = detrended_variance_track(x, 10, 1)
    assert tr.timestamps[0] == days[9] and tr.timestamps[-1] == days[-1]
    with pytest.raises(ScaleTooLarge):
        detrended_variance_track(x, 51, 1)
    with pytest.raises(DegenerateDetrend):
        detrended_variance_track(np.full(100, 2.0), 20, 1)


def test_grid_serialization(tmp_path, rng):
    g = fluctuation_function_single(rng.normal(size=200), [-1.0, 0.0, 1.0], [10, 20])
    g.to_csv(tmp_path / "g.csv")
    g.to_json(tmp_path / "g.json")
    rows = list(csv.DictReader((tmp_path / "g.csv").open()))
    assert len(rows) == 6 and set(rows[0]) == {"q", "s", "F"}
    assert float(rows[-1]["F"]) == pytest.approx(g.F[-1, -1], rel=1e-11)
    d = json.loads((tmp_path / "g.json").read_text())
    assert d["s"] == [10, 20] and d["kind"] == "single"
