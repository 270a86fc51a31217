"""Bootstrap confidence intervals for the population estimate.

Each replicate resamples the observed capture-history totals from their
multinomial distribution (m trials, probabilities proportional to the observed
counts) and reruns the full estimation pipeline, so model selection variation
is reflected in the intervals.  Intervals are bias-corrected and accelerated:
the bias term comes from the proportion of replicates below the original
estimate and the acceleration from a weighted jackknife over the distinct
observed histories.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import EstimabilityError
from .histories import CaptureDataset
from .inference import DEFAULT_THRESHOLD, threshold_estimate
from .rng import DEFAULT_SEED, compose_index, substream


def bootstrap_sample(dataset: CaptureDataset, rng: np.random.Generator) -> CaptureDataset:
    """One multinomial resample of the observed history totals (same m)."""
    histories = dataset.histories
    counts = np.array([dataset.counts[h] for h in histories], dtype=np.float64)
    probs = counts / counts.sum()
    probs /= probs.sum()
    draw = rng.multinomial(dataset.m, probs)
    return CaptureDataset(
        dataset.labels,
        {h: int(c) for h, c in zip(histories, draw) if c > 0},
    )


def _acceleration(weights: np.ndarray, leave_one_out: np.ndarray) -> tuple[float, float, bool]:
    """Weighted jackknife acceleration from leave-one-out estimates.

    Returns (a_hat, theta_dot, degenerate); degenerate means the leave-one-out
    values have no spread, in which case the acceleration is the formula's
    limit, zero.
    """
    total = weights.sum()
    theta_dot = float(weights @ leave_one_out / total)
    dev = theta_dot - leave_one_out
    d2 = float(weights @ dev**2)
    d3 = float(weights @ dev**3)
    if d2 <= 0.0:
        return 0.0, theta_dot, True
    return d3 / (6.0 * d2**1.5), theta_dot, False


def weighted_jackknife(
    dataset: CaptureDataset, threshold: float = DEFAULT_THRESHOLD
) -> tuple[float, float, dict[int, float]]:
    """Acceleration factor via one leave-one-out fit per distinct history.

    Removing an individual with history w just decrements that history's
    count, so only K estimates are needed for K distinct observed histories,
    each weighted by its count.  Returns (a_hat, theta_dot, leave_one_out).
    """
    if dataset.m < 2:
        raise ValueError("jackknife needs at least two observed cases")
    leave_one_out: dict[int, float] = {}
    for history in dataset.histories:
        counts = dict(dataset.counts)
        counts[history] -= 1
        reduced = CaptureDataset(dataset.labels, counts)
        leave_one_out[history] = threshold_estimate(reduced, threshold)
    weights = np.array([dataset.counts[h] for h in dataset.histories], dtype=np.float64)
    values = np.array([leave_one_out[h] for h in dataset.histories])
    a_hat, theta_dot, degenerate = _acceleration(weights, values)
    if degenerate:
        warnings.warn("degenerate jackknife: all leave-one-out estimates equal; a=0")
    return a_hat, theta_dot, leave_one_out


def bias_correction(replicates: np.ndarray, point: float) -> float:
    """z0 from the proportion of replicates below the original estimate.

    Exact ties count half, so a point sitting on a large atom of the
    replicate distribution is treated as centred rather than extreme; the
    proportion is clamped away from 0 and 1 to keep z0 finite.
    """
    r = len(replicates)
    below = int(np.sum(replicates < point))
    ties = int(np.sum(replicates == point))
    prop = (below + 0.5 * ties) / r
    prop = min(max(prop, 1.0 / (r + 1)), r / (r + 1.0))
    return float(norm.ppf(prop))


def _empirical_quantile(sorted_reps: np.ndarray, alpha: float) -> float:
    """Type-6 quantile: position alpha*(R+1), linear interpolation, clamped.

    Stated explicitly because the adjusted-percentile endpoints are sensitive
    to the quantile rule.
    """
    r = len(sorted_reps)
    k = alpha * (r + 1)
    k = min(max(k, 1.0), float(r))
    lo = int(math.floor(k))
    frac = k - lo
    if lo >= r:
        return float(sorted_reps[r - 1])
    return float(sorted_reps[lo - 1] + frac * (sorted_reps[lo] - sorted_reps[lo - 1]))


def bca_interval(
    replicates: np.ndarray,
    point: float,
    z0: float,
    a: float,
    level: float,
) -> tuple[float, float]:
    """Bias-corrected accelerated percentile interval at one confidence level."""
    if len(replicates) == 0:
        raise ValueError("no replicates")
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must be in (0, 1), got {level}")
    sorted_reps = np.sort(np.asarray(replicates, dtype=np.float64))
    lo = _adjusted_alpha(z0, a, norm.ppf((1.0 - level) / 2.0))
    hi = _adjusted_alpha(z0, a, norm.ppf(1.0 - (1.0 - level) / 2.0))
    return (
        _empirical_quantile(sorted_reps, lo),
        _empirical_quantile(sorted_reps, hi),
    )


def _adjusted_alpha(z0: float, a: float, z: float) -> float:
    denom = 1.0 - a * (z0 + z)
    if denom <= 0.0:
        # past the acceleration singularity; the quantile clamp below caps the
        # effect, but warn because the interval endpoint is saturated
        warnings.warn("acceleration singularity in interval adjustment; endpoint clamped")
        return 1.0 if z0 + z > 0 else 0.0
    return float(norm.cdf(z0 + (z0 + z) / denom))


@dataclass(frozen=True)
class BootstrapResult:
    point: float
    replicates: np.ndarray
    z0: float
    a: float
    intervals: dict[float, tuple[float, float]]
    n_requested: int
    n_failed: int
    seed: int
    degenerate_jackknife: bool = field(default=False)

    def to_json_obj(self) -> dict:
        return {
            "point": self.point,
            "z0": self.z0,
            "a": self.a,
            "intervals": {
                f"{level:g}": [lo, hi] for level, (lo, hi) in sorted(self.intervals.items())
            },
            "n_requested": self.n_requested,
            "n_failed": self.n_failed,
            "seed": self.seed,
        }


def _replicate_slots(
    dataset: CaptureDataset, threshold: float, seed: int, lo: int, hi: int, max_failures: int
) -> tuple[list[float], int]:
    """Estimates for replicate slots [lo, hi); failed draws are redrawn.

    Slot i and redraw attempt k use the stream keyed by (seed, i, k), so the
    result is independent of how slots are scheduled across workers.
    """
    estimates: list[float] = []
    failed = 0
    for slot in range(lo, hi):
        attempt = 0
        while True:
            rng = substream(seed, compose_index(slot, attempt))
            sample = bootstrap_sample(dataset, rng)
            try:
                estimates.append(threshold_estimate(sample, threshold))
                break
            except EstimabilityError:
                failed += 1
                attempt += 1
                if failed > max_failures:
                    raise RuntimeError(
                        f"more than {max_failures} bootstrap replicates failed "
                        "the estimability checks; data too sparse to bootstrap"
                    ) from None
    return estimates, failed


def bootstrap_estimate(
    dataset: CaptureDataset,
    threshold: float = DEFAULT_THRESHOLD,
    n_boot: int = 1000,
    levels: tuple[float, ...] = (0.80, 0.95),
    seed: int = DEFAULT_SEED,
    *,
    threads: int = 1,
) -> BootstrapResult:
    """Bootstrap the full estimation pipeline and form adjusted intervals.

    ``threshold`` follows the usual convention: 0 fits main effects only, 1
    the full two-list model, interior values run stepwise selection.
    Replicates whose model is not estimable are redrawn (and counted), so the
    returned replicate vector always has length ``n_boot``.
    """
    if n_boot < 1:
        raise ValueError("need at least one bootstrap replicate")
    point = threshold_estimate(dataset, threshold)

    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        bounds = np.linspace(0, n_boot, threads + 1, dtype=np.int64)
        jobs = [
            (dataset, threshold, seed, int(bounds[k]), int(bounds[k + 1]), n_boot)
            for k in range(threads)
            if bounds[k] < bounds[k + 1]
        ]
        replicates: list[float] = []
        n_failed = 0
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for part, failed in pool.map(_replicate_slots_star, jobs):
                replicates.extend(part)
                n_failed += failed
        if n_failed > n_boot:
            # per-chunk caps cannot see the total, so re-check the sum
            raise RuntimeError(
                f"more than {n_boot} bootstrap replicates failed the "
                "estimability checks; data too sparse to bootstrap"
            )
    else:
        replicates, n_failed = _replicate_slots(dataset, threshold, seed, 0, n_boot, n_boot)
    reps = np.array(replicates)

    if n_failed > 0.01 * n_boot:
        warnings.warn(
            f"{n_failed} of {n_boot} bootstrap replicates were redrawn after "
            "estimability failures"
        )

    z0 = bias_correction(reps, point)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        a_hat, _, _ = weighted_jackknife(dataset, threshold)
    degenerate = any("degenerate jackknife" in str(w.message) for w in caught)

    intervals = {level: bca_interval(reps, point, z0, a_hat, level) for level in levels}
    return BootstrapResult(
        point=point,
        replicates=reps,
        z0=z0,
        a=a_hat,
        intervals=intervals,
        n_requested=n_boot,
        n_failed=n_failed,
        seed=seed,
        degenerate_jackknife=degenerate,
    )


def _replicate_slots_star(args):
    return _replicate_slots(*args)
