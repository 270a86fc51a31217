import numpy as np
import pytest

from caprecap import (
    estimate_over_thresholds,
    estimate_population,
    simulate_from_fit,
    threshold_study,
)
from caprecap.simulation import deviance_qq_study, endpoints_estimable


@pytest.fixture(scope="module")
def uk_main_fit(uk):
    result, _ = estimate_population(uk, method="main")
    return result


def test_population_split_invariant(uk_main_fit):
    batch = simulate_from_fit(uk_main_fit, 50, seed=5)
    assert batch.n_pop == uk_main_fit.m + round(uk_main_fit.dark_figure)
    for realization, dark in zip(batch.realizations, batch.dark_figures):
        assert realization.m + dark == batch.n_pop


def test_simulated_cell_means(uk_main_fit):
    n = 300
    batch = simulate_from_fit(uk_main_fit, n, seed=17)
    assert batch.n_removed <= 0.05 * n
    histories = [int(h) for h in uk_main_fit.omega]
    totals = np.zeros(len(histories))
    for realization in batch.realizations:
        totals += [realization.count(h) for h in histories]
    means = totals / len(batch.realizations)
    cellsum = uk_main_fit.dark_figure + uk_main_fit.fitted.sum()
    probs = uk_main_fit.fitted / cellsum
    expect = batch.n_pop * probs
    se = np.sqrt(batch.n_pop * probs * (1 - probs) / len(batch.realizations))
    assert np.all(np.abs(means - expect) <= 3 * se + 0.5)


def test_filter_is_idempotent(uk_main_fit):
    batch = simulate_from_fit(uk_main_fit, 40, seed=23)
    assert all(endpoints_estimable(r) for r in batch.realizations)


def test_simulation_determinism(uk_main_fit):
    a = simulate_from_fit(uk_main_fit, 25, seed=77)
    b = simulate_from_fit(uk_main_fit, 25, seed=77)
    assert a.realizations == b.realizations
    assert np.array_equal(a.dark_figures, b.dark_figures)


def test_estimate_over_thresholds_endpoints(western):
    source, _ = estimate_population(western, method="main")
    batch = simulate_from_fit(source, 12, seed=3)
    taus = (0.0, 1e-12, 0.02, 1.0)
    table = estimate_over_thresholds(batch, taus)
    assert table.shape == (len(batch.realizations), 4)
    for r, realization in enumerate(batch.realizations):
        main, _ = estimate_population(realization, method="main")
        full, _ = estimate_population(realization, method="full")
        assert table[r, 0] == pytest.approx(main.population_estimate)
        assert table[r, 3] == pytest.approx(full.population_estimate)
    # a threshold below every achievable p-value selects nothing
    assert np.array_equal(table[:, 0], table[:, 1])


def test_threshold_study_single_scenario(western):
    res = threshold_study([("western", 0.0)], n_sims=30, est_thresholds=(0.0, 0.02, 1.0), seed=9)
    assert res.log_mse.shape == (1, 3)
    assert res.scenarios == (("western", 0.0),)
    csv = res.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "scenario_data,0,0.02,1,scenario_model"
    assert lines[-1].startswith("mean,")


def test_threshold_study_warns_and_skips_bad_scenario(artificial3):
    # the full model on the three-list demonstration data is unidentifiable
    with pytest.warns(UserWarning, match="skipped"):
        res = threshold_study(
            [(artificial3, 1.0), ("western", 0.0)],
            n_sims=10,
            est_thresholds=(0.0, 1.0),
            seed=4,
        )
    assert len(res.scenarios) == 1


def test_threshold_study_log_mse_definition(uk):
    res = threshold_study([("uk", 0.0)], n_sims=1, est_thresholds=(0.0,), seed=12)
    source, _ = estimate_population(uk, method="main")
    batch = simulate_from_fit(source, 1, seed=12)
    assert len(batch.realizations) == 1
    est = estimate_over_thresholds(batch, (0.0,))[0, 0]
    expected = np.log((np.log(est) - np.log(batch.n_pop)) ** 2)
    assert res.log_mse[0, 0] == pytest.approx(expected)


def test_deviance_qq_classic_small():
    reductions = deviance_qq_study((0.3, 0.3, 0.3), 1000.0, 400, seed=6)
    assert len(reductions) == 400
    assert 0.7 <= reductions.mean() <= 1.3
    assert np.all(reductions >= -1e-8)


def test_deviance_qq_zero_probability_list():
    # a never-captured list leaves the main-effects estimate nonexistent, so
    # every realization is dropped
    reductions = deviance_qq_study((0.0, 0.3, 0.3), 500.0, 20, seed=2)
    assert len(reductions) == 0


def test_deviance_qq_exercises_reduced_branch():
    # tiny overlap probabilities make zero 1:2 overlaps common; those
    # realizations take the -infinity route and still yield finite reductions
    reductions = deviance_qq_study((0.02, 0.05, 0.3), 800.0, 150, seed=13)
    assert len(reductions) > 100
    assert np.all(np.isfinite(reductions))


def test_deviance_qq_validation():
    with pytest.raises(ValueError):
        deviance_qq_study((0.3, 0.3), 100.0, 5)
    with pytest.raises(ValueError):
        deviance_qq_study((0.3, 0.3, 1.0), 100.0, 5)


def test_deviance_qq_determinism():
    a = deviance_qq_study((0.1, 0.2, 0.3), 500.0, 50, seed=31)
    b = deviance_qq_study((0.1, 0.2, 0.3), 500.0, 50, seed=31)
    assert np.array_equal(a, b)


def test_deviance_qq_threads_invariant():
    serial = deviance_qq_study((0.1, 0.2, 0.3), 500.0, 80, seed=31, threads=1)
    parallel = deviance_qq_study((0.1, 0.2, 0.3), 500.0, 80, seed=31, threads=2)
    assert np.array_equal(serial, parallel)


def test_threshold_study_threads_invariant():
    serial = threshold_study(
        [("uk", 0.0)], n_sims=12, est_thresholds=(0.0, 0.02, 1.0), seed=9, threads=1
    )
    parallel = threshold_study(
        [("uk", 0.0)], n_sims=12, est_thresholds=(0.0, 0.02, 1.0), seed=9, threads=2
    )
    assert np.array_equal(serial.log_mse, parallel.log_mse)
