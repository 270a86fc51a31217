"""Poisson log-linear model fitting with explicit handling of zero overlaps.

A model is the intercept, all main effects, and a chosen subset of two-list
parameters.  Any chosen pair whose observed overlap is zero has its parameter
maximized at -infinity; those parameters and every cell containing the pair
are removed before the remaining coefficients are estimated by Newton
iteration (iteratively reweighted least squares) on the reduced likelihood,
which is strictly concave whenever the reduced design has full column rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
import scipy.linalg

from .errors import NonConvergenceError, NonexistentMLEError, UnidentifiableError
from .histories import CaptureDataset, ListPair, all_pairs, history_sort_key
from . import simplex

# existence threshold for the LP optimum: with integer counts and a 0/1
# incidence matrix the true optimum is a small-denominator rational, so the
# 0-versus-positive decision is numerically robust at this scale
LP_EPS = 1e-9

SCORE_TOL = 1e-8
LOGLIK_RTOL = 1e-10
MAX_ITERATIONS = 100
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class ModelSpec:
    """Parameter set: intercept and main effects plus chosen two-list pairs."""

    t: int
    pairs: frozenset[ListPair] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        pairs = frozenset(
            p if isinstance(p, ListPair) else ListPair.of(*p) for p in self.pairs
        )
        object.__setattr__(self, "pairs", pairs)
        if self.t < 2:
            raise ValueError("need at least two lists")
        for p in pairs:
            if p.j >= self.t:
                raise ValueError(f"pair ({p.i},{p.j}) out of range for {self.t} lists")
        if 1 + self.t + len(pairs) > (1 << self.t) - 1:
            raise ValueError("more parameters than observable cells")

    @classmethod
    def main_effects(cls, t: int) -> "ModelSpec":
        return cls(t, frozenset())

    @classmethod
    def full(cls, t: int) -> "ModelSpec":
        return cls(t, all_pairs(t))

    def add(self, pair: ListPair) -> "ModelSpec":
        return ModelSpec(self.t, self.pairs | {pair})

    def drop(self, pair: ListPair) -> "ModelSpec":
        return ModelSpec(self.t, self.pairs - {pair})

    @property
    def is_full(self) -> bool:
        return len(self.pairs) == self.t * (self.t - 1) // 2


@dataclass(frozen=True)
class ReducedProblem:
    """Model after removing -infinity parameters and the cells they zero out.

    ``theta`` lists the retained parameter indices (bitmasks) and ``omega``
    (a read-only int64 array) the retained observable histories, both in
    canonical order.  ``design`` is the 0/1 incidence matrix with
    design[w, h] = 1 iff theta[h] is a subset of omega[w].
    """

    t: int
    theta: tuple[int, ...]
    omega: np.ndarray
    infinite_pairs: frozenset[ListPair]
    design: np.ndarray


def _marginal(counts: Mapping[int, int], mask: int) -> int:
    return sum(c for h, c in counts.items() if h & mask == mask)


@lru_cache(maxsize=None)
def _canonical_cells(t: int) -> np.ndarray:
    cells = sorted(range(1, 1 << t), key=history_sort_key)
    arr = np.array(cells, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def reduce_table(t: int, counts: Mapping[int, int], pairs: Iterable[ListPair]) -> ReducedProblem:
    """Low-level reduction over a raw count table (no dataset validation)."""
    pairs = frozenset(pairs)
    infinite = frozenset(p for p in pairs if _marginal(counts, p.mask) == 0)
    theta = [0] + [1 << i for i in range(t)]
    theta.extend(sorted(p.mask for p in pairs - infinite))
    cells = _canonical_cells(t)
    if infinite:
        removed = np.array([p.mask for p in infinite], dtype=np.int64)
        keep = ~np.any((cells[:, None] & removed[None, :]) == removed[None, :], axis=1)
        omega_arr = cells[keep]
    else:
        omega_arr = cells
    theta_arr = np.array(theta, dtype=np.int64)
    design = ((omega_arr[:, None] & theta_arr[None, :]) == theta_arr[None, :]).astype(np.float64)
    omega_arr = omega_arr.copy()
    omega_arr.setflags(write=False)
    return ReducedProblem(t, tuple(theta), omega_arr, infinite, design)


def reduce_problem(dataset: CaptureDataset, spec: ModelSpec) -> ReducedProblem:
    """Identify -infinity parameters and build the reduced design."""
    if spec.t != dataset.t:
        raise ValueError(f"model is for {spec.t} lists but data has {dataset.t}")
    return reduce_table(dataset.t, dataset.counts, spec.pairs)


def _counts_over(rp: ReducedProblem, counts: Mapping[int, int]) -> np.ndarray:
    dense = np.zeros(1 << rp.t)
    for h, c in counts.items():
        dense[h] = c
    return dense[rp.omega]


def sufficient_statistics(rp: ReducedProblem, counts: Mapping[int, int]) -> np.ndarray:
    """The N* marginals for each retained parameter."""
    return rp.design.T @ _counts_over(rp, counts)


def existence_value(rp: ReducedProblem, counts: Mapping[int, int]) -> float:
    """Optimum of the existence linear program for a reduced problem.

    Maximizes s subject to A^T x = tvec and x >= s over the retained cells.
    The optimum is always >= 0 because x equal to the observed counts with
    s = 0 is feasible; the estimate exists iff the optimum is strictly
    positive.
    """
    tvec = sufficient_statistics(rp, counts)
    ncells = len(rp.omega)
    # substitute x = u + s with u >= 0; s >= 0 is harmless because the
    # optimum is never negative
    M = np.empty((len(rp.theta), ncells + 1))
    M[:, :ncells] = rp.design.T
    M[:, ncells] = rp.design.sum(axis=0)
    c = np.zeros(ncells + 1)
    c[ncells] = 1.0
    status, smax = simplex.solve_equality_max(M, tvec, c)
    # the observed counts themselves satisfy the constraints, so anything but
    # an optimal status signals a solver bug
    assert status == simplex.OPTIMAL, f"existence LP ended with status {status}"
    return smax


@dataclass(frozen=True)
class FitResult:
    """Converged fit of a reduced Poisson log-linear model.

    ``coefficients`` maps parameter bitmasks to finite estimates on the log
    scale; parameters for the pairs in ``infinite_pairs`` are -infinity and
    have no entry.  ``loglik`` omits the data-only additive constant.
    """

    labels: tuple[str, ...]
    spec: ModelSpec
    coefficients: dict[int, float]
    infinite_pairs: frozenset[ListPair]
    omega: np.ndarray
    fitted: np.ndarray
    m: int
    loglik: float
    deviance: float
    dark_figure: float
    population_estimate: float
    iterations: int
    converged: bool

    @property
    def fitted_means(self) -> dict[int, float]:
        return {int(h): float(v) for h, v in zip(self.omega, self.fitted)}

    def marginal(self, theta: int) -> float:
        """Fitted N* marginal: sum of fitted means over cells containing theta.

        Cells zeroed out by -infinity parameters contribute nothing, so any
        history containing such a pair yields 0.
        """
        keep = (self.omega & theta) == theta
        return float(self.fitted[keep].sum())

    def coefficient_label(self, theta: int) -> str:
        if theta == 0:
            return "intercept"
        return ":".join(lab for i, lab in enumerate(self.labels) if theta >> i & 1)

    def to_json_obj(self) -> dict:
        coeff = {self.coefficient_label(h): v for h, v in self.coefficients.items()}
        for p in sorted(self.infinite_pairs):
            coeff[self.coefficient_label(p.mask)] = "-inf"
        return {
            "coefficients": coeff,
            "dark_figure": self.dark_figure,
            "population_estimate": self.population_estimate,
            "loglik": self.loglik,
            "deviance": self.deviance,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def fitted_marginal(result: FitResult, theta: int) -> float:
    return result.marginal(theta)


def _full_model_identifiable(t: int, counts: Mapping[int, int]) -> bool:
    # the reduced design of the all-pairs model is rank deficient iff no three
    # lists are pairwise overlapping; count triangles in the overlap graph
    J = np.zeros((t, t))
    for i in range(t):
        for j in range(i + 1, t):
            if _marginal(counts, (1 << i) | (1 << j)) > 0:
                J[i, j] = J[j, i] = 1.0
    return float(np.trace(J @ J @ J)) > 0.0


def _structural_rank(design: np.ndarray) -> int:
    r = scipy.linalg.qr(design, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    return int(np.sum(diag > RANK_RTOL * diag[0]))


def fit_table(
    t: int,
    counts: Mapping[int, int],
    pairs: Iterable[ListPair] = (),
    *,
    labels: tuple[str, ...] | None = None,
    max_iterations: int = MAX_ITERATIONS,
    start: str = "glm",
) -> FitResult:
    """Fit a model on a raw count table (works for any t >= 2).

    Runs the existence check on the reduced problem before iterating; a zero
    LP optimum raises NonexistentMLEError and a rank-deficient design raises
    UnidentifiableError rather than silently dropping parameters.

    ``start`` picks the initial coefficients: ``glm`` (default) does one
    weighted least-squares step on the working response at mu = y + 0.1,
    ``flat`` puts the whole observed total in the intercept.  The likelihood
    is strictly concave, so both reach the same maximizer; the default gets
    there in fewer Newton steps.
    """
    spec = ModelSpec(t, frozenset(pairs))
    counts = {h: c for h, c in counts.items() if c > 0}
    if labels is None:
        labels = tuple(f"L{i}" for i in range(t))
    m = sum(counts.values())
    if m < 1:
        raise ValueError("need at least one observed case")

    if spec.is_full and not _full_model_identifiable(t, counts):
        raise UnidentifiableError(
            "every three lists contain a non-overlapping pair, so the full "
            "two-list model has no unique maximizer"
        )

    rp = reduce_table(t, counts, spec.pairs)
    smax = existence_value(rp, counts)
    if smax <= LP_EPS:
        raise NonexistentMLEError(
            f"existence LP optimum is {smax:.3g}; no maximum likelihood estimate"
        )
    X = rp.design
    n_par = X.shape[1]
    if _structural_rank(X) < n_par:
        raise UnidentifiableError("reduced design matrix is rank deficient")

    y = _counts_over(rp, counts)

    if start == "glm":
        mu0 = y + 0.1
        eta0 = np.log(mu0)
        z = eta0 + (y - mu0) / mu0
        w0 = np.sqrt(mu0)
        beta = np.linalg.lstsq(w0[:, None] * X, w0 * z, rcond=None)[0]
    elif start == "flat":
        beta = np.zeros(n_par)
        beta[0] = math.log(m / len(rp.omega))
    else:
        raise ValueError(f"unknown start {start!r}")
    eta = X @ beta
    with np.errstate(over="ignore"):
        mu = np.exp(np.minimum(eta, 700.0))
    loglik = float(y @ eta - mu.sum())

    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        w = np.sqrt(mu)
        np.maximum(w, 1e-150, out=w)
        delta = np.linalg.lstsq(w[:, None] * X, (y - mu) / w, rcond=None)[0]
        step = 1.0
        new_beta = beta
        new_loglik = loglik
        for _ in range(60):
            cand = beta + step * delta
            eta_c = X @ cand
            with np.errstate(over="ignore"):
                mu_c = np.exp(np.minimum(eta_c, 700.0))
            ll_c = float(y @ eta_c - mu_c.sum())
            if ll_c >= loglik - 1e-13 * (1.0 + abs(loglik)):
                new_beta, new_loglik = cand, ll_c
                eta, mu = eta_c, mu_c
                break
            step *= 0.5
        rel_change = abs(new_loglik - loglik) / (abs(new_loglik) + 1.0)
        beta, loglik = new_beta, new_loglik
        score = X.T @ (y - mu)
        if np.max(np.abs(score)) < SCORE_TOL and rel_change < LOGLIK_RTOL:
            converged = True
            break
    if not converged:
        raise NonConvergenceError(
            f"no convergence after {max_iterations} iterations "
            f"(max score {np.max(np.abs(X.T @ (y - mu))):.3g})"
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        dev_terms = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / mu), 0.0)
    deviance = float(2.0 * (dev_terms - (y - mu)).sum())
    dark = math.exp(beta[0])
    return FitResult(
        labels=labels,
        spec=spec,
        coefficients={h: float(b) for h, b in zip(rp.theta, beta)},
        infinite_pairs=rp.infinite_pairs,
        omega=rp.omega,
        fitted=mu.copy(),
        m=m,
        loglik=loglik,
        deviance=deviance,
        dark_figure=dark,
        population_estimate=m + dark,
        iterations=iterations,
        converged=converged,
    )


def fit(dataset: CaptureDataset, spec: ModelSpec, **kwargs) -> FitResult:
    """Fit a model to a dataset; see fit_table for the failure modes."""
    if spec.t != dataset.t:
        raise ValueError(f"model is for {spec.t} lists but data has {dataset.t}")
    return fit_table(dataset.t, dataset.counts, spec.pairs, labels=dataset.labels, **kwargs)
