"""Significance of two-list parameters and forward stepwise model choice.

The p-value for a candidate pair tests whether its observed overlap total is
surprising under the model fitted without that parameter: the overlap total is
Poisson with mean equal to the fitted marginal, so the p-value is the smaller
of the two tail probabilities (which reduces to exp(-mean) when the observed
overlap is zero).  Stepwise selection repeatedly adds the smallest-p candidate
whose addition keeps the model estimable, stopping once the smallest p-value
exceeds the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.stats import poisson

from .errors import NonexistentMLEError
from .estimability import check_model
from .fitting import FitResult, ModelSpec, fit
from .histories import CaptureDataset, ListPair, all_pairs

DEFAULT_THRESHOLD = 0.02

# Candidates whose minimum p-values agree to this tolerance are treated as
# tied and broken lexicographically, so reruns and bootstrap replicates are
# reproducible.
P_TIE_TOL = 1e-12


def poisson_two_tail(n: int, lam: float) -> float:
    """min(P[X <= n], P[X >= n]) for X ~ Poisson(lam), point mass in both tails."""
    if n == 0:
        return math.exp(-lam)
    return float(min(poisson.cdf(n, lam), poisson.sf(n - 1, lam)))


def p_value(dataset: CaptureDataset, spec: ModelSpec, pair: ListPair) -> float:
    """Significance of one two-list parameter in the context of ``spec``.

    Fits the model without ``pair`` and evaluates the observed overlap total
    against its fitted Poisson mean.  If the model without the pair has no
    maximum likelihood estimate the parameter cannot be removed, so the
    effective p-value is zero.
    """
    base = ModelSpec(spec.t, spec.pairs - {pair})
    report = check_model(dataset, base)
    if not report.exists:
        return 0.0
    base_fit = fit(dataset, base)
    return _candidate_p(dataset, base_fit, pair)


def _candidate_p(dataset: CaptureDataset, base_fit: FitResult, pair: ListPair) -> float:
    lam = base_fit.marginal(pair.mask)
    n = dataset.marginal(pair.mask)
    return poisson_two_tail(n, lam)


@dataclass(frozen=True)
class StepwiseStep:
    """One round of candidate evaluation.

    ``evaluations`` maps each absent pair to its p-value, or to a verdict
    string when adding the pair was blocked by an estimability check.
    ``chosen`` is None on the stopping round.
    """

    evaluations: dict[ListPair, float | str]
    chosen: ListPair | None
    p_value: float | None
    population_estimate: float

    def to_json_obj(self, dataset: CaptureDataset) -> dict:
        return {
            "candidates": {
                dataset.pair_label(p): v for p, v in sorted(self.evaluations.items())
            },
            "chosen": dataset.pair_label(self.chosen) if self.chosen else None,
            "p_value": self.p_value,
            "population_estimate": self.population_estimate,
        }


@dataclass(frozen=True)
class StepwiseTrail:
    steps: tuple[StepwiseStep, ...]
    final_spec: ModelSpec

    def to_json_obj(self, dataset: CaptureDataset) -> dict:
        return {
            "steps": [s.to_json_obj(dataset) for s in self.steps],
            "final_pairs": sorted(dataset.pair_label(p) for p in self.final_spec.pairs),
        }


def _greedy_rounds(
    dataset: CaptureDataset, cap: float
) -> tuple[ModelSpec, list[StepwiseStep], list[float]]:
    """Run the greedy forward path while the round minimum p stays <= cap.

    The chosen pair in each round does not depend on the threshold, only the
    stopping point does, so one pass at ``cap`` serves every threshold below
    it.  Returns the reached spec, the recorded rounds, and the population
    estimate after 0, 1, 2, ... additions.
    """
    t = dataset.t
    current = ModelSpec.main_effects(t)
    report = check_model(dataset, current)
    if not report.exists:
        raise NonexistentMLEError(
            "the main-effects model has no maximum likelihood estimate "
            f"(existence LP optimum {report.s_max:.3g})"
        )
    base_fit = fit(dataset, current)
    prefix_estimates = [base_fit.population_estimate]
    steps: list[StepwiseStep] = []
    candidates_left = set(all_pairs(t))
    while candidates_left:
        evaluations: dict[ListPair, float | str] = {}
        usable: list[tuple[float, ListPair]] = []
        for pair in sorted(candidates_left):
            cand_report = check_model(dataset, current.add(pair))
            if not cand_report.ok:
                evaluations[pair] = cand_report.verdict
                continue
            p = _candidate_p(dataset, base_fit, pair)
            evaluations[pair] = p
            usable.append((p, pair))
        if not usable:
            steps.append(StepwiseStep(evaluations, None, None, base_fit.population_estimate))
            break
        p_min = min(p for p, _ in usable)
        chosen = min(pair for p, pair in usable if p <= p_min + P_TIE_TOL)
        if p_min > cap:
            steps.append(StepwiseStep(evaluations, None, p_min, base_fit.population_estimate))
            break
        current = current.add(chosen)
        base_fit = fit(dataset, current)
        prefix_estimates.append(base_fit.population_estimate)
        steps.append(StepwiseStep(evaluations, chosen, p_min, base_fit.population_estimate))
        candidates_left.discard(chosen)
    return current, steps, prefix_estimates


def stepwise(dataset: CaptureDataset, threshold: float = DEFAULT_THRESHOLD) -> tuple[ModelSpec, StepwiseTrail]:
    """Forward stepwise selection of two-list parameters.

    Starting from main effects only, each round evaluates every absent pair
    (skipping any whose addition would make the estimate nonexistent, or
    non-identifiable when it would complete the full model) and adds the
    minimum-p pair while that minimum stays at or below the threshold.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    spec, steps, _ = _greedy_rounds(dataset, threshold)
    return spec, StepwiseTrail(tuple(steps), spec)


def estimate_population(
    dataset: CaptureDataset,
    *,
    method: str = "stepwise",
    threshold: float = DEFAULT_THRESHOLD,
    spec: ModelSpec | None = None,
) -> tuple[FitResult, StepwiseTrail | None]:
    """Population estimate via stepwise selection or a directly chosen model.

    ``method`` is one of ``stepwise`` (forward selection at ``threshold``),
    ``main`` (main effects only), ``full`` (all two-list parameters) or
    ``fixed`` (the supplied ``spec``).
    """
    if method == "stepwise":
        final_spec, trail = stepwise(dataset, threshold)
        return fit(dataset, final_spec), trail
    if method == "main":
        return fit(dataset, ModelSpec.main_effects(dataset.t)), None
    if method == "full":
        return fit(dataset, ModelSpec.full(dataset.t)), None
    if method == "fixed":
        if spec is None:
            raise ValueError("method 'fixed' needs a model spec")
        return fit(dataset, spec), None
    raise ValueError(f"unknown method {method!r}")


def threshold_estimate(dataset: CaptureDataset, threshold: float) -> float:
    """Population estimate at a threshold, with 0 = main effects, 1 = full model."""
    if threshold == 0.0:
        result, _ = estimate_population(dataset, method="main")
    elif threshold == 1.0:
        result, _ = estimate_population(dataset, method="full")
    else:
        result, _ = estimate_population(dataset, method="stepwise", threshold=threshold)
    return result.population_estimate


def threshold_sweep_estimates(dataset: CaptureDataset, thresholds: list[float]) -> list[float]:
    """Population estimates for several thresholds, sharing one greedy path.

    Equivalent to calling threshold_estimate per threshold, but the stepwise
    path is computed once up to the largest interior threshold.
    """
    for tau in thresholds:
        if not 0.0 <= tau <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {tau}")
    interior = [tau for tau in thresholds if 0.0 < tau < 1.0]
    chosen_ps: list[float] = []
    prefix_estimates: list[float] = []
    if interior:
        _, steps, prefix_estimates = _greedy_rounds(dataset, max(interior))
        chosen_ps = [s.p_value for s in steps if s.chosen is not None]
    elif 0.0 in thresholds:
        prefix_estimates = [threshold_estimate(dataset, 0.0)]
    full_estimate = threshold_estimate(dataset, 1.0) if 1.0 in thresholds else None
    out = []
    for tau in thresholds:
        if tau == 1.0:
            out.append(full_estimate)
        elif tau == 0.0:
            out.append(prefix_estimates[0])
        else:
            depth = 0
            for p in chosen_ps:
                if p <= tau:
                    depth += 1
                else:
                    break
            out.append(prefix_estimates[depth])
    return out
