"""Model-based Monte Carlo studies.

Datasets are generated from a fitted model by multinomial sampling of a fixed
population (the observed total plus the rounded dark figure) over the dark
cell and the fitted cell means.  Realizations that fail the endpoint
estimability checks (main-effects existence; full-model existence and
uniqueness) are removed up front so that every retained realization is
estimable at every threshold.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EstimabilityError
from .estimability import check_model
from .fitting import FitResult, ModelSpec, fit_table
from .histories import CaptureDataset
from .inference import threshold_sweep_estimates
from .rng import DEFAULT_SEED, substream

ESTIMATION_THRESHOLDS = (0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 1.0)
SCENARIO_THRESHOLDS = (0.0, 0.001, 0.05, 1.0)


@dataclass(frozen=True)
class SimulationBatch:
    source_fit: FitResult
    realizations: tuple[CaptureDataset, ...]
    dark_figures: np.ndarray
    n_pop: int
    n_removed: int


def endpoints_estimable(dataset: CaptureDataset) -> bool:
    """Main-effects estimate exists and the full model is estimable and unique."""
    if not check_model(dataset, ModelSpec.main_effects(dataset.t)).exists:
        return False
    return check_model(dataset, ModelSpec.full(dataset.t)).ok


def simulate_from_fit(
    source: FitResult,
    n_sims: int,
    seed: int = DEFAULT_SEED,
    *,
    index_offset: int = 0,
) -> SimulationBatch:
    """Draw datasets from a fitted model at its estimated population size.

    The population is the observed total plus the dark figure rounded to the
    nearest integer; each realization splits it multinomially over the dark
    cell and the fitted cell means.  Realization i uses the random stream
    keyed by (seed, index_offset + i).
    """
    n_pop = source.m + int(math.floor(source.dark_figure + 0.5))
    cellmeans = np.concatenate(([source.dark_figure], source.fitted))
    probs = cellmeans / cellmeans.sum()
    labels = source.labels
    histories = [int(h) for h in source.omega]

    realizations: list[CaptureDataset] = []
    dark_figures: list[int] = []
    n_removed = 0
    for i in range(n_sims):
        rng = substream(seed, index_offset + i)
        draw = rng.multinomial(n_pop, probs)
        dark = int(draw[0])
        counts = {h: int(c) for h, c in zip(histories, draw[1:]) if c > 0}
        if not counts:
            n_removed += 1
            continue
        realization = CaptureDataset(labels, counts)
        if not endpoints_estimable(realization):
            n_removed += 1
            continue
        realizations.append(realization)
        dark_figures.append(dark)
    return SimulationBatch(
        source_fit=source,
        realizations=tuple(realizations),
        dark_figures=np.array(dark_figures, dtype=np.int64),
        n_pop=n_pop,
        n_removed=n_removed,
    )


def _sweep_rows(args) -> list[list[float]]:
    realizations, thresholds = args
    return [threshold_sweep_estimates(r, thresholds) for r in realizations]


def estimate_over_thresholds(
    batch: SimulationBatch,
    thresholds: tuple[float, ...] = ESTIMATION_THRESHOLDS,
    *,
    threads: int = 1,
) -> np.ndarray:
    """Population estimates per realization and threshold.

    Threshold 0 is the main-effects fit, 1 the full two-list model; interior
    values run stepwise selection.  The batch filter guarantees the endpoint
    fits exist for every realization.  Realizations are independent, so
    ``threads`` only fans the loop out; the result does not depend on it.
    """
    thresholds = list(thresholds)
    n = len(batch.realizations)
    if threads > 1 and n >= 2 * threads:
        from concurrent.futures import ProcessPoolExecutor

        bounds = np.linspace(0, n, threads + 1, dtype=np.int64)
        jobs = [
            (batch.realizations[int(bounds[k]) : int(bounds[k + 1])], thresholds)
            for k in range(threads)
            if bounds[k] < bounds[k + 1]
        ]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = [row for part in pool.map(_sweep_rows, jobs) for row in part]
        return np.array(rows)
    out = np.empty((n, len(thresholds)))
    for r, realization in enumerate(batch.realizations):
        out[r, :] = threshold_sweep_estimates(realization, thresholds)
    return out


@dataclass(frozen=True)
class ThresholdStudyResult:
    scenarios: tuple[tuple[str, float], ...]
    est_thresholds: tuple[float, ...]
    log_mse: np.ndarray
    n_removed: tuple[int, ...]

    @property
    def column_means(self) -> np.ndarray:
        return self.log_mse.mean(axis=0)

    def to_csv(self) -> str:
        header = ["scenario_data"] + [f"{t:g}" for t in self.est_thresholds] + ["scenario_model"]
        lines = [",".join(header)]
        for (name, model_tau), row in zip(self.scenarios, self.log_mse):
            label = {0.0: "main", 1.0: "full"}.get(model_tau, f"{model_tau:g}")
            lines.append(",".join([name] + [f"{v:.3f}" for v in row] + [label]))
        lines.append(",".join(["mean"] + [f"{v:.3f}" for v in self.column_means] + [""]))
        return "\n".join(lines) + "\n"


def threshold_study(
    scenarios: list[tuple[CaptureDataset | str, float]],
    n_sims: int = 200,
    est_thresholds: tuple[float, ...] = ESTIMATION_THRESHOLDS,
    seed: int = DEFAULT_SEED,
    *,
    threads: int = 1,
) -> ThresholdStudyResult:
    """Score estimation thresholds over model-based simulation scenarios.

    Each scenario is (dataset or builtin name, model threshold); the scenario
    model is fitted to its dataset and n_sims realizations are drawn from the
    fit.  The score entry is log(mean((log estimate - log population)^2))
    over the realizations, one column per estimation threshold.
    """
    from .datasets import builtin_dataset

    resolved: list[tuple[str, CaptureDataset, float]] = []
    for data, model_tau in scenarios:
        if isinstance(data, str):
            resolved.append((data, builtin_dataset(data), model_tau))
        else:
            resolved.append(("dataset", data, model_tau))

    rows: list[np.ndarray] = []
    kept: list[tuple[str, float]] = []
    removed: list[int] = []
    for s, (name, dataset, model_tau) in enumerate(resolved):
        try:
            source, _ = _scenario_fit(dataset, model_tau)
        except EstimabilityError as exc:
            warnings.warn(f"scenario ({name}, {model_tau:g}) skipped: {exc}")
            continue
        batch = simulate_from_fit(source, n_sims, seed, index_offset=s << 40)
        if not batch.realizations:
            warnings.warn(
                f"scenario ({name}, {model_tau:g}) skipped: every realization "
                "failed the estimability filter"
            )
            continue
        estimates = estimate_over_thresholds(batch, est_thresholds, threads=threads)
        log_err = (np.log(estimates) - math.log(batch.n_pop)) ** 2
        rows.append(np.log(log_err.mean(axis=0)))
        kept.append((name, model_tau))
        removed.append(batch.n_removed)
    if not rows:
        raise ValueError("no scenario produced an estimable simulation batch")
    return ThresholdStudyResult(
        scenarios=tuple(kept),
        est_thresholds=tuple(est_thresholds),
        log_mse=np.vstack(rows),
        n_removed=tuple(removed),
    )


def _scenario_fit(dataset: CaptureDataset, model_tau: float):
    from .inference import estimate_population

    if model_tau == 0.0:
        return estimate_population(dataset, method="main")
    if model_tau == 1.0:
        return estimate_population(dataset, method="full")
    return estimate_population(dataset, method="stepwise", threshold=model_tau)


def deviance_qq_study(
    capture_probs: tuple[float, float, float],
    expected_pop: float,
    n_sims: int,
    seed: int = DEFAULT_SEED,
    *,
    threads: int = 1,
) -> np.ndarray:
    """Deviance reductions for adding one two-list parameter on 3-list data.

    Per simulation, independent Poisson cell counts are drawn with means
    expected_pop * prod(p_i, i in history) * prod(1 - p_i, i not in history),
    then the main-effects model and the model adding the pair of the first
    two lists are fitted and the deviance reduction recorded.  When the
    simulated overlap of lists 1 and 2 is zero the pair parameter is
    -infinity and the reduction is computed on the reduced likelihood.
    Realizations whose models are not estimable are dropped; the returned
    vector is correspondingly shorter than n_sims.
    """
    probs = tuple(float(p) for p in capture_probs)
    if len(probs) != 3:
        raise ValueError("exactly three capture probabilities required")
    if any(not 0.0 <= p < 1.0 for p in probs):
        raise ValueError("capture probabilities must lie in [0, 1)")
    cells = list(range(1, 8))
    means = np.array(
        [
            expected_pop
            * math.prod(probs[i] if h >> i & 1 else 1.0 - probs[i] for i in range(3))
            for h in cells
        ]
    )
    if threads > 1 and n_sims >= 2 * threads:
        from concurrent.futures import ProcessPoolExecutor

        bounds = np.linspace(0, n_sims, threads + 1, dtype=np.int64)
        jobs = [
            (means, seed, int(bounds[k]), int(bounds[k + 1]))
            for k in range(threads)
            if bounds[k] < bounds[k + 1]
        ]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_deviance_chunk, jobs))
        return np.concatenate(parts)
    return _deviance_chunk((means, seed, 0, n_sims))


def _deviance_chunk(args) -> np.ndarray:
    means, seed, lo, hi = args
    cells = list(range(1, 8))
    reductions: list[float] = []
    for i in range(lo, hi):
        rng = substream(seed, i)
        draw = rng.poisson(means)
        counts = {h: int(c) for h, c in zip(cells, draw) if c > 0}
        if not counts:
            continue
        try:
            main_fit = fit_table(3, counts)
            pair_fit = fit_table(3, counts, [(0, 1)])
        except EstimabilityError:
            continue
        reductions.append(main_fit.deviance - pair_fit.deviance)
    return np.array(reductions)
