"""Self-contained dense two-phase primal simplex.

The linear programs solved here are small: a few dozen equality constraints
over at most a few hundred nonnegative variables, with 0/1 constraint
coefficients and integer right-hand sides.  A dense tableau with Bland's
smallest-index rule is simple, deterministic and cycle-free, and with integer
data the optima are well-scaled rationals.  numba compiles the pivot loop when
available; the pure-Python fallback is functionally identical, just slow.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on minimal installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def decorate(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return decorate


OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITERATION_LIMIT = 3

_PIVOT_EPS = 1e-9
_COST_EPS = 1e-9
_FEAS_EPS = 1e-7
_MAX_PIVOTS = 100_000


@njit(cache=True)
def _pivot(T, basis, in_basis, row, col):
    m, width = T.shape
    pv = T[row, col]
    for j in range(width):
        T[row, j] /= pv
    T[row, col] = 1.0
    for i in range(m):
        if i == row:
            continue
        f = T[i, col]
        if f != 0.0:
            for j in range(width):
                T[i, j] -= f * T[row, j]
            T[i, col] = 0.0
    in_basis[basis[row]] = False
    in_basis[col] = True
    basis[row] = col


@njit(cache=True)
def simplex_max(M, b, c):
    """Maximize c.z subject to M z = b, z >= 0, with b >= 0 on entry.

    Returns (status, objective).  Artificial variables give the starting
    basis; Bland's rule picks the entering and leaving variables in both
    phases, so the iteration cannot cycle.
    """
    m, n = M.shape
    width = n + m + 1
    T = np.zeros((m, width))
    for i in range(m):
        for j in range(n):
            T[i, j] = M[i, j]
        T[i, n + i] = 1.0
        T[i, width - 1] = b[i]
    basis = np.empty(m, np.int64)
    in_basis = np.zeros(n + m, np.bool_)
    for i in range(m):
        basis[i] = n + i
        in_basis[n + i] = True
    active = np.ones(m, np.bool_)

    # phase 1: minimize the sum of the artificial variables
    for _ in range(_MAX_PIVOTS):
        enter = -1
        for j in range(n):
            if in_basis[j]:
                continue
            r = 0.0
            for i in range(m):
                if basis[i] >= n:
                    r += T[i, j]
            if r > _COST_EPS:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best = 0.0
        for i in range(m):
            if not active[i]:
                continue
            a = T[i, enter]
            if a > _PIVOT_EPS:
                ratio = T[i, width - 1] / a
                if leave < 0 or ratio < best - 1e-12 or (
                    abs(ratio - best) <= 1e-12 and basis[i] < basis[leave]
                ):
                    leave = i
                    best = ratio
        if leave < 0:
            return INFEASIBLE, 0.0
        _pivot(T, basis, in_basis, leave, enter)
    resid = 0.0
    for i in range(m):
        if basis[i] >= n:
            resid += T[i, width - 1]
    if resid > _FEAS_EPS:
        return INFEASIBLE, 0.0

    # drive out artificial variables still basic (at value ~0); rows with no
    # usable pivot are redundant constraints and drop out of the ratio tests
    for i in range(m):
        if basis[i] >= n and active[i]:
            piv = -1
            for j in range(n):
                if not in_basis[j] and abs(T[i, j]) > 1e-7:
                    piv = j
                    break
            if piv >= 0:
                _pivot(T, basis, in_basis, i, piv)
            else:
                active[i] = False
    for i in range(m):
        if T[i, width - 1] < 0.0:
            T[i, width - 1] = 0.0

    # phase 2: maximize the real objective
    for _ in range(_MAX_PIVOTS):
        enter = -1
        for j in range(n):
            if in_basis[j]:
                continue
            r = c[j]
            for i in range(m):
                bi = basis[i]
                if bi < n:
                    cb = c[bi]
                    if cb != 0.0:
                        r -= cb * T[i, j]
            if r > _COST_EPS:
                enter = j
                break
        if enter < 0:
            obj = 0.0
            for i in range(m):
                if basis[i] < n:
                    obj += c[basis[i]] * T[i, width - 1]
            return OPTIMAL, obj
        leave = -1
        best = 0.0
        for i in range(m):
            if not active[i]:
                continue
            a = T[i, enter]
            if a > _PIVOT_EPS:
                ratio = T[i, width - 1] / a
                if leave < 0 or ratio < best - 1e-12 or (
                    abs(ratio - best) <= 1e-12 and basis[i] < basis[leave]
                ):
                    leave = i
                    best = ratio
        if leave < 0:
            return UNBOUNDED, 0.0
        _pivot(T, basis, in_basis, leave, enter)
    return ITERATION_LIMIT, 0.0


def solve_equality_max(M: np.ndarray, b: np.ndarray, c: np.ndarray) -> tuple[int, float]:
    """Python-facing wrapper around the compiled kernel."""
    M = np.ascontiguousarray(M, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    if np.any(b < 0):
        raise ValueError("right-hand side must be nonnegative")
    return simplex_max(M, b, c)
