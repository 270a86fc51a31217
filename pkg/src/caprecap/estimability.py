"""Existence and identifiability audits.

Existence of the (extended) maximum likelihood estimate is decided by a
linear program over the reduced problem; the estimate exists iff the optimum
is strictly positive.  Identifiability can only fail for the model containing
every two-list parameter, and then exactly when the overlap graph of the
lists has no triangle, which is the trace criterion below.

``check_all_models`` confirms both properties for every one of the
2^(t(t-1)/2) candidate models while solving only 2^M linear programs, M the
number of non-overlapping pairs: removing an overlapping pair deletes one
LP constraint and therefore cannot decrease the optimum, so only models that
contain all overlapping pairs need to be tested directly.  Failures are
expanded by a hierarchical descent that removes overlapping pairs one at a
time and prunes any branch whose LP is already positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fitting import LP_EPS, ModelSpec, existence_value, reduce_problem
from .histories import CaptureDataset, ListPair, all_pairs, history_sort_key
from .simplex import OPTIMAL, njit, simplex_max

MAX_NONOVERLAPPING = 24

VERDICT_OK = "ok"
VERDICT_NONEXISTENT = "nonexistent_mle"
VERDICT_UNIDENTIFIABLE = "unidentifiable"


@dataclass(frozen=True)
class EstimabilityReport:
    s_max: float
    exists: bool
    identifiable: bool

    @property
    def verdict(self) -> str:
        if not self.exists:
            return VERDICT_NONEXISTENT
        if not self.identifiable:
            return VERDICT_UNIDENTIFIABLE
        return VERDICT_OK

    @property
    def ok(self) -> bool:
        return self.exists and self.identifiable

    def to_json_obj(self) -> dict:
        return {
            "s_max": self.s_max,
            "exists": self.exists,
            "identifiable": self.identifiable,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class AllModelsAudit:
    tested: int
    failures: tuple[tuple[frozenset[ListPair], str], ...]

    @property
    def all_ok(self) -> bool:
        return not self.failures


def existence_lp(dataset: CaptureDataset, spec: ModelSpec) -> float:
    """Optimum of the existence LP for the given model."""
    rp = reduce_problem(dataset, spec)
    return existence_value(rp, dataset.counts)


def identifiability(dataset: CaptureDataset, spec: ModelSpec) -> bool:
    """Whether the maximizing parameters are unique.

    Any model omitting a two-list pair is identifiable; the full model is
    identifiable iff the list overlap graph contains a triangle
    (trace(J^3) > 0 for the 0/1 overlap matrix J).
    """
    if spec.t != dataset.t:
        raise ValueError(f"model is for {spec.t} lists but data has {dataset.t}")
    if not spec.is_full:
        return True
    t = dataset.t
    J = np.zeros((t, t))
    for p in dataset.overlapping_pairs():
        J[p.i, p.j] = J[p.j, p.i] = 1.0
    return float(np.trace(J @ J @ J)) > 0.0


def check_model(dataset: CaptureDataset, spec: ModelSpec) -> EstimabilityReport:
    """Existence and identifiability verdict for one model."""
    smax = existence_lp(dataset, spec)
    return EstimabilityReport(
        s_max=smax,
        exists=smax > LP_EPS,
        identifiable=identifiability(dataset, spec),
    )


# -- exhaustive audit ----------------------------------------------------


@njit(cache=True)
def _sweep_kernel(AT, tvec, masks, lo, hi, out):  # pragma: no cover - jit kernel
    """Existence LPs for subsets of removable cells, Gray-code order.

    AT (p x ncells) is the incidence matrix of the base model (all overlapping
    pairs) transposed; masks[q, k] = 1 if cell k contains non-overlapping pair
    q.  For i in [lo, hi) the subset g = i ^ (i >> 1) of non-overlapping pairs
    is added to the model, which removes every covered cell; out[g] receives
    the LP optimum (or -1 if the solver failed, which cannot legitimately
    happen).
    """
    p, ncells = AT.shape
    npairs = masks.shape[0]
    cover = np.zeros(ncells, np.int32)
    g = lo ^ (lo >> 1)
    for q in range(npairs):
        if (g >> q) & 1:
            for k in range(ncells):
                cover[k] += masks[q, k]
    Mbuf = np.zeros((p, ncells + 1))
    cbuf = np.zeros(ncells + 1)
    kept = np.empty(ncells, np.int64)
    prev = g
    for i in range(lo, hi):
        g = i ^ (i >> 1)
        if i > lo:
            flip = g ^ prev
            q = 0
            while ((flip >> q) & 1) == 0:
                q += 1
            if (g >> q) & 1:
                for k in range(ncells):
                    cover[k] += masks[q, k]
            else:
                for k in range(ncells):
                    cover[k] -= masks[q, k]
        prev = g
        nk = 0
        for k in range(ncells):
            if cover[k] == 0:
                kept[nk] = k
                nk += 1
        for r in range(p):
            srow = 0.0
            for idx in range(nk):
                v = AT[r, kept[idx]]
                Mbuf[r, idx] = v
                srow += v
            Mbuf[r, nk] = srow
        for idx in range(nk):
            cbuf[idx] = 0.0
        cbuf[nk] = 1.0
        status, smax = simplex_max(Mbuf[:, : nk + 1], tvec, cbuf[: nk + 1])
        if status == OPTIMAL:
            out[g] = smax
        else:
            out[g] = -1.0


def _sweep_chunk(args) -> tuple[int, int, np.ndarray]:
    AT, tvec, masks, lo, hi, size = args
    out = np.full(size, np.nan)
    _sweep_kernel(AT, tvec, masks, lo, hi, out)
    return lo, hi, out


def _run_sweep(
    AT: np.ndarray,
    tvec: np.ndarray,
    masks: np.ndarray,
    n_subsets: int,
    threads: int,
) -> np.ndarray:
    out = np.full(n_subsets, np.nan)
    if threads <= 1 or n_subsets < 1024:
        _sweep_kernel(AT, tvec, masks, 0, n_subsets, out)
        return out
    # fan out over contiguous index ranges; each worker re-derives its Gray
    # state from the range start, so results are independent of scheduling
    from concurrent.futures import ProcessPoolExecutor

    bounds = np.linspace(0, n_subsets, threads + 1, dtype=np.int64)
    jobs = [
        (AT, tvec, masks, int(bounds[k]), int(bounds[k + 1]), n_subsets)
        for k in range(threads)
        if bounds[k] < bounds[k + 1]
    ]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for lo, hi, part in pool.map(_sweep_chunk, jobs):
            gray = np.arange(lo, hi, dtype=np.int64)
            gray ^= gray >> 1
            out[gray] = part[gray]
    return out


def _descend(
    dataset: CaptureDataset,
    overlapping: tuple[ListPair, ...],
    nonover_subset: frozenset[ListPair],
    on_model: Callable[[frozenset[ListPair], float, str], None] | None,
) -> tuple[list[frozenset[ListPair]], int]:
    """Remove overlapping pairs one at a time below a failing sweep model.

    Every model on a path below a failing model fails too (the LP optimum is
    antitone in the overlapping pairs retained), so pruning positive branches
    loses nothing.
    """
    failing: list[frozenset[ListPair]] = []
    tested = 0
    visited = {frozenset(overlapping)}
    stack = [frozenset(overlapping)]
    while stack:
        current = stack.pop()
        for q in sorted(current):
            child = current - {q}
            if child in visited:
                continue
            visited.add(child)
            model_pairs = child | nonover_subset
            smax = existence_lp(dataset, ModelSpec(dataset.t, model_pairs))
            tested += 1
            if smax > LP_EPS:
                if on_model is not None:
                    on_model(frozenset(model_pairs), smax, VERDICT_OK)
                continue
            if on_model is not None:
                on_model(frozenset(model_pairs), smax, VERDICT_NONEXISTENT)
            failing.append(frozenset(model_pairs))
            stack.append(child)
    return failing, tested


def _model_sort_key(pairs: frozenset[ListPair]) -> tuple:
    return tuple(sorted((p.i, p.j) for p in pairs))


def check_all_models(
    dataset: CaptureDataset,
    *,
    threads: int = 1,
    on_model: Callable[[frozenset[ListPair], float, str], None] | None = None,
) -> AllModelsAudit:
    """Audit existence and uniqueness over every candidate model.

    ``on_model`` is invoked once per LP solved, as
    ``on_model(pairs, s_max, verdict)``, in deterministic order (sweep models
    by subset index over the non-overlapping pairs, then descent models).
    """
    nonover = sorted(dataset.nonoverlapping_pairs())
    overlapping = tuple(sorted(dataset.overlapping_pairs()))
    M = len(nonover)
    if M > MAX_NONOVERLAPPING:
        names = ", ".join(dataset.pair_label(p) for p in nonover)
        raise ValueError(
            f"audit needs 2^{M} linear programs, past the 2^{MAX_NONOVERLAPPING} "
            f"limit; non-overlapping pairs: {names}"
        )

    t = dataset.t
    cells = sorted(range(1, 1 << t), key=history_sort_key)
    cells_arr = np.array(cells, dtype=np.int64)
    theta = [0] + [1 << i for i in range(t)] + [p.mask for p in overlapping]
    theta_arr = np.array(theta, dtype=np.int64)
    AT = ((cells_arr[None, :] & theta_arr[:, None]) == theta_arr[:, None]).astype(np.float64)
    counts_vec = np.array([dataset.count(h) for h in cells], dtype=np.float64)
    tvec = AT @ counts_vec
    masks = np.zeros((max(M, 1), len(cells)), dtype=np.uint8)
    for q, p in enumerate(nonover):
        masks[q] = (cells_arr & p.mask) == p.mask

    n_subsets = 1 << M
    smax_by_subset = _run_sweep(AT, tvec, masks, n_subsets, threads)
    assert not np.any(np.isnan(smax_by_subset)) and np.all(smax_by_subset >= 0.0), (
        "audit sweep produced an invalid LP result"
    )
    tested = n_subsets

    full_identifiable = identifiability(dataset, ModelSpec.full(t))
    base = frozenset(overlapping)
    failures: list[tuple[frozenset[ListPair], str]] = []
    failing_subsets: list[frozenset[ListPair]] = []
    for g in range(n_subsets):
        subset = frozenset(nonover[q] for q in range(M) if (g >> q) & 1)
        model_pairs = base | subset
        smax = float(smax_by_subset[g])
        if smax <= LP_EPS:
            verdict = VERDICT_NONEXISTENT
            failures.append((model_pairs, verdict))
            failing_subsets.append(subset)
        elif len(model_pairs) == t * (t - 1) // 2 and not full_identifiable:
            verdict = VERDICT_UNIDENTIFIABLE
            failures.append((model_pairs, verdict))
        else:
            verdict = VERDICT_OK
        if on_model is not None:
            on_model(model_pairs, smax, verdict)

    for subset in failing_subsets:
        found, n_lps = _descend(dataset, overlapping, subset, on_model)
        tested += n_lps
        failures.extend((pairs, VERDICT_NONEXISTENT) for pairs in found)

    failures.sort(key=lambda item: _model_sort_key(item[0]))
    return AllModelsAudit(tested=tested, failures=tuple(failures))


def enumerate_all_models(dataset: CaptureDataset) -> list[tuple[frozenset[ListPair], EstimabilityReport]]:
    """Brute-force check of every model; exponential, for small t only."""
    pairs = sorted(all_pairs(dataset.t))
    results = []
    for bits in range(1 << len(pairs)):
        subset = frozenset(p for q, p in enumerate(pairs) if (bits >> q) & 1)
        report = check_model(dataset, ModelSpec(dataset.t, subset))
        results.append((subset, report))
    return results
