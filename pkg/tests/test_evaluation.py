import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmdnet.core import DimensionError, Rng
from mmdnet.evaluation import (
    DEFAULT_GRID, KdeConfig, bootstrap_se, curve_summarize, kde_log_densities,
    kde_mean_log_density, kde_select_bandwidth, moving_average, score_samples,
)
from mmdnet.generator import AffineGenerator
from mmdnet.trainer import CurveRow, TrainReport
from oracles import naive_kde_mean_log_density


def test_single_point_at_centre():
    assert kde_mean_log_density([[0.3]], [[0.3]], 1.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)
    assert kde_mean_log_density([[0.3]], [[0.3]], 1.0) == pytest.approx(-0.918939, abs=1e-6)


def test_monotone_decreasing_in_distance():
    ds = [0.0, 1.0, 5.0, 20.0, 100.0, 1000.0]
    vals = [kde_mean_log_density([[0.0, 0.0]], [[d, 0.0]], 0.5) for d in ds]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # far tail stays finite thanks to the shifted log-sum-exp
    assert math.isfinite(vals[-1])


def test_symmetric_pair_equals_single_point():
    single = kde_mean_log_density([[1.5]], [[0.0]], 0.7)
    pair = kde_mean_log_density([[1.5], [-1.5]], [[0.0]], 0.7)
    assert pair == pytest.approx(single, rel=1e-14)


def test_matches_naive_summation_oracle():
    for child in Rng(77).spawn(20):
        d = int(child.integers(1, 6))
        Y, T = child.standard_normal((15, d)), child.standard_normal((9, d))
        sigma = float(child.uniform(0.5, 2.0))
        ref = naive_kde_mean_log_density(Y, T, sigma)
        assert kde_mean_log_density(Y, T, sigma) == pytest.approx(ref, rel=1e-10)


def test_permutation_invariance(rng):
    Y, T = rng.standard_normal((12, 3)), rng.standard_normal((8, 3))
    base = kde_mean_log_density(Y, T, 0.8)
    v = kde_mean_log_density(Y[rng.permutation(12)], T[rng.permutation(8)], 0.8)
    assert v == pytest.approx(base, rel=1e-14)


def test_density_errors():
    with pytest.raises(ValueError):
        kde_mean_log_density([[0.0]], np.zeros((0, 1)), 1.0)
    with pytest.raises(DimensionError):
        kde_mean_log_density([[0.0]], [[0.0, 1.0]], 1.0)
    with pytest.raises(ValueError):
        kde_mean_log_density([[0.0]], [[0.0]], 0.0)


def test_select_singleton_and_duplicates(rng):
    Y, V = rng.standard_normal((30, 1)), rng.standard_normal((30, 1))
    assert kde_select_bandwidth(Y, V, [0.37]) == 0.37
    grid = [0.1, 0.3, 1.0, 3.0]
    assert kde_select_bandwidth(Y, V, grid + grid[::-1]) == kde_select_bandwidth(Y, V, grid)


def test_select_mid_bandwidth_for_matched_gaussians():
    r = Rng(2)
    Y, V = r.standard_normal((500, 1)), r.standard_normal((500, 1))
    grid = [0.01, 0.5, 10.0]
    scores = [kde_mean_log_density(Y, V, s) for s in grid]
    assert int(np.argmax(scores)) == 1
    assert kde_select_bandwidth(Y, V, grid) == 0.5


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_select_all_minus_inf_is_an_error():
    with pytest.raises(ValueError):
        kde_select_bandwidth([[0.0]], [[1e200]], [1e-200])
    with pytest.raises(ValueError):
        kde_select_bandwidth([[0.0]], [[0.0]], [])


def test_score_finite_over_default_grid(rng):
    Y, T = rng.uniform(0, 1, (50, 4)), rng.uniform(0, 1, (20, 4))
    assert all(math.isfinite(kde_mean_log_density(Y, T, s)) for s in DEFAULT_GRID)
    assert len(DEFAULT_GRID) == 10
    assert DEFAULT_GRID[0] == pytest.approx(0.01) and DEFAULT_GRID[-1] == pytest.approx(1.0)


def test_kde_config_validation():
    with pytest.raises(ValueError):
        KdeConfig(bandwidth="select", bandwidth_grid=())
    with pytest.raises(ValueError):
        KdeConfig(bandwidth=-1.0)
    with pytest.raises(ValueError):
        KdeConfig(validation_fraction=1.0)


def test_bootstrap_se_against_formula():
    r = Rng(8)
    v = r.standard_normal(400)
    se = bootstrap_se(v, r, n_boot=4000)
    assert se == pytest.approx(v.std() / math.sqrt(v.size), rel=0.1)
    assert bootstrap_se(np.full(10, 3.0), r) == 0.0


def test_score_samples_report(rng):
    Y, V, T = rng.standard_normal((100, 1)), rng.standard_normal((80, 1)), rng.standard_normal((60, 1))
    rep = score_samples(Y, V, T, KdeConfig(bandwidth_grid=(0.1, 0.3, 1.0)), rng, n_boot=200)
    assert rep.bandwidth in (0.1, 0.3, 1.0)
    assert rep.score == pytest.approx(kde_mean_log_density(Y, T, rep.bandwidth))
    assert (rep.m_generated, rep.n_test) == (100, 60)
    text = rep.format()
    for key in ("score:", "stderr:", "bandwidth:", "m_generated: 100", "n_test: 60"):
        assert key in text
    fixed = score_samples(Y, V, T, KdeConfig(bandwidth=0.25), rng, n_boot=10)
    assert fixed.bandwidth == 0.25


def _report(costs):
    return TrainReport([CurveRow(i, float(c), None) for i, c in enumerate(costs)], AffineGenerator([0.0], [1.0]))


def test_moving_average_examples():
    ramp = np.arange(1.0, 11.0)
    np.testing.assert_array_equal(moving_average(ramp, 1), ramp)
    np.testing.assert_allclose(moving_average(ramp, 2), np.arange(1.5, 10.0))
    np.testing.assert_array_equal(moving_average(np.full(7, 2.5), 3), 2.5)
    with pytest.raises(ValueError):
        moving_average(ramp, 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_window_one_is_identity(values):
    np.testing.assert_array_equal(moving_average(values, 1), np.asarray(values))


def test_curve_summarize():
    s = curve_summarize(_report([3.0, 1.0, 2.0, 0.5, 4.0]), 2)
    np.testing.assert_allclose(s.smoothed, [2.0, 1.5, 1.25, 2.25])
    assert s.iterations.tolist() == [1, 2, 3, 4]
    assert (s.minimum, s.argmin, s.final) == (0.5, 3, 4.0)
    empty = curve_summarize(_report([]), 3)
    assert empty.smoothed.size == 0 and math.isnan(empty.final)
