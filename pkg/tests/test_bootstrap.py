import numpy as np
import pytest
from scipy.stats import norm

from caprecap import (
    CaptureDataset,
    bca_interval,
    bootstrap_estimate,
    bootstrap_sample,
    weighted_jackknife,
)
from caprecap.bootstrap import _acceleration, _empirical_quantile
from caprecap.rng import substream


def test_degenerate_single_history_sample():
    d = CaptureDataset(("A", "B", "C"), {0b001: 12})
    rng = substream(5, 0)
    assert bootstrap_sample(d, rng) == d


def test_sample_total_is_m(western):
    for i in range(20):
        sample = bootstrap_sample(western, substream(99, i))
        assert sample.m == western.m
        assert sample.labels == western.labels


def test_sample_moments(western):
    # mean resampled count per history should sit within 3 binomial standard
    # errors of the original count
    n = 400
    histories = western.histories
    totals = np.zeros(len(histories))
    for i in range(n):
        sample = bootstrap_sample(western, substream(31337, i))
        totals += [sample.count(h) for h in histories]
    means = totals / n
    m = western.m
    for mean, h in zip(means, histories):
        p = western.count(h) / m
        se = np.sqrt(m * p * (1 - p) / n)
        assert abs(mean - western.count(h)) <= 3 * se + 1e-9


def test_acceleration_hand_case():
    # direct evaluation of the weighted acceleration formula
    weights = np.array([2.0, 1.0, 1.0])
    loo = np.array([1.0, 2.0, 3.0])
    theta_dot = (2 * 1 + 1 * 2 + 1 * 3) / 4
    d2 = 2 * (theta_dot - 1) ** 2 + (theta_dot - 2) ** 2 + (theta_dot - 3) ** 2
    d3 = 2 * (theta_dot - 1) ** 3 + (theta_dot - 2) ** 3 + (theta_dot - 3) ** 3
    expected = d3 / (6 * d2**1.5)
    a, dot, degenerate = _acceleration(weights, loo)
    assert dot == pytest.approx(1.75)
    assert a == pytest.approx(expected)
    assert expected == pytest.approx(-0.041115, abs=1e-6)
    assert not degenerate


def test_acceleration_symmetric_is_zero():
    weights = np.array([1.0, 2.0, 2.0, 1.0])
    loo = np.array([-3.0, -1.0, 1.0, 3.0])
    a, dot, degenerate = _acceleration(weights, loo)
    assert dot == 0.0
    assert a == 0.0
    assert not degenerate


def test_acceleration_degenerate():
    a, dot, degenerate = _acceleration(np.array([3.0, 2.0]), np.array([5.0, 5.0]))
    assert a == 0.0
    assert degenerate


def test_jackknife_runs_one_fit_per_history(western):
    a, theta_dot, loo = weighted_jackknife(western, 0.02)
    assert set(loo) == set(western.histories)
    weights = np.array([western.counts[h] for h in western.histories], float)
    values = np.array([loo[h] for h in western.histories])
    assert theta_dot == pytest.approx(weights @ values / western.m)


def test_jackknife_weighting_identity(western):
    # expanding each history into N copies of its leave-one-out value gives
    # the same average as the weighted formula
    _, theta_dot, loo = weighted_jackknife(western, 0.02)
    expanded = [loo[h] for h in western.histories for _ in range(western.counts[h])]
    assert theta_dot == pytest.approx(np.mean(expanded))


def test_empirical_quantile_rule():
    reps = np.arange(1.0, 11.0)  # 1..10
    # position alpha*(R+1) with linear interpolation
    assert _empirical_quantile(reps, 0.5) == pytest.approx(5.5)
    assert _empirical_quantile(reps, 1.0 / 11.0) == pytest.approx(1.0)
    # clamped at the extremes
    assert _empirical_quantile(reps, 0.0) == 1.0
    assert _empirical_quantile(reps, 1.0) == 10.0


def test_bca_reduces_to_percentile():
    reps = np.arange(1.0, 1001.0)
    lo, hi = bca_interval(reps, 500.0, 0.0, 0.0, 0.80)
    assert lo == pytest.approx(100.1)
    assert hi == pytest.approx(900.9)
    lo95, hi95 = bca_interval(reps, 500.0, 0.0, 0.0, 0.95)
    assert lo95 == pytest.approx(0.025 * 1001, abs=0.6)
    assert hi95 == pytest.approx(0.975 * 1001, abs=0.6)


def test_bca_shifts_upward_with_positive_bias():
    reps = np.sort(np.random.default_rng(0).normal(size=500))
    base = bca_interval(reps, 0.0, 0.0, 0.0, 0.9)
    shifted = bca_interval(reps, 0.0, 0.8, 0.0, 0.9)
    assert shifted[0] > base[0]
    assert shifted[1] > base[1]


def test_bca_interval_nesting():
    reps = np.sort(np.random.default_rng(1).normal(size=800))
    narrow = bca_interval(reps, 0.0, 0.1, 0.05, 0.80)
    wide = bca_interval(reps, 0.0, 0.1, 0.05, 0.95)
    assert wide[0] <= narrow[0]
    assert narrow[1] <= wide[1]


def test_bca_singularity_clamped():
    reps = np.arange(1.0, 101.0)
    with pytest.warns(UserWarning, match="singularity"):
        lo, hi = bca_interval(reps, 50.0, 1.0, 0.5, 0.95)
    assert 1.0 <= lo <= hi <= 100.0


def test_bootstrap_determinism(western):
    a = bootstrap_estimate(western, 0.02, n_boot=40, seed=11)
    b = bootstrap_estimate(western, 0.02, n_boot=40, seed=11)
    assert np.array_equal(a.replicates, b.replicates)
    assert a.intervals == b.intervals
    c = bootstrap_estimate(western, 0.02, n_boot=40, seed=12)
    assert not np.array_equal(a.replicates, c.replicates)


def test_bootstrap_threads_invariant(western):
    serial = bootstrap_estimate(western, 0.02, n_boot=24, seed=3, threads=1)
    parallel = bootstrap_estimate(western, 0.02, n_boot=24, seed=3, threads=2)
    assert np.array_equal(serial.replicates, parallel.replicates)
    assert serial.n_failed == parallel.n_failed
    assert serial.intervals == parallel.intervals


def test_bootstrap_z0_matches_below_proportion(western):
    res = bootstrap_estimate(western, 0.02, n_boot=60, seed=21)
    below = np.sum(res.replicates < res.point)
    ties = np.sum(res.replicates == res.point)
    prop = (below + 0.5 * ties) / 60
    prop = min(max(prop, 1 / 61), 60 / 61)
    assert res.z0 == pytest.approx(norm.ppf(prop))
    assert res.n_requested == 60
    assert len(res.replicates) == 60


def test_bootstrap_interval_order(western):
    res = bootstrap_estimate(western, 0.02, n_boot=60, seed=2)
    for lo, hi in res.intervals.values():
        assert lo <= hi
    l80, h80 = res.intervals[0.80]
    l95, h95 = res.intervals[0.95]
    assert l95 <= l80 and h80 <= h95


def test_bootstrap_json_fields(western):
    res = bootstrap_estimate(western, 0.02, n_boot=24, seed=9)
    obj = res.to_json_obj()
    assert set(obj) == {
        "point",
        "z0",
        "a",
        "intervals",
        "n_requested",
        "n_failed",
        "seed",
    }
    assert "0.95" in obj["intervals"]


def test_bootstrap_requires_replicates(western):
    with pytest.raises(ValueError):
        bootstrap_estimate(western, 0.02, n_boot=0)


def test_bootstrap_aborts_on_pathological_data():
    # one list carried by a single individual: resamples drop it constantly
    d = CaptureDataset(("A", "B", "C"), {0b001: 1, 0b010: 8, 0b100: 8, 0b110: 2})
    with pytest.raises(RuntimeError, match="too sparse"):
        bootstrap_estimate(d, 0.5, n_boot=1, seed=1)


def test_jackknife_propagates_leave_one_out_failure():
    # removing the only individual on list A leaves a dataset with no estimate
    from caprecap import NonexistentMLEError

    d = CaptureDataset(("A", "B", "C"), {0b001: 1, 0b010: 8, 0b100: 8, 0b110: 2})
    with pytest.raises(NonexistentMLEError):
        weighted_jackknife(d, 0.5)


from hypothesis import given, settings
from hypothesis import strategies as st


@given(
    st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=200),
    st.floats(0.1, 0.99),
    st.floats(-1.5, 1.5),
    st.floats(-0.2, 0.2),
)
@settings(max_examples=150, deadline=None)
def test_bca_endpoints_stay_inside_replicate_range(reps, level, z0, a):
    reps = np.array(reps)
    lo, hi = bca_interval(reps, float(np.median(reps)), z0, a, level)
    assert reps.min() <= lo <= hi <= reps.max()


def test_bias_correction_median_point():
    from caprecap.bootstrap import bias_correction

    rng = np.random.default_rng(12)
    reps = rng.normal(size=501)
    z0 = bias_correction(reps, float(np.median(reps)))
    assert abs(z0) <= norm.ppf(0.5 + 1.0 / len(reps))
    # all replicates equal to the point: half ties puts z0 at zero
    assert bias_correction(np.full(100, 7.0), 7.0) == pytest.approx(0.0)
