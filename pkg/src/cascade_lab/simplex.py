"""Small dense-tableau simplex solver.

Solves  min c.x  subject to  A x <= b,  x >= 0,  with b >= 0, which is the
shape every LP in this package reduces to (the right-hand sides come from
shifted box constraints, so the all-slack basis is immediately feasible and
no phase-1 is needed). Dantzig pricing with a permanent switch to Bland's
rule after a run of degenerate pivots keeps the heavily degenerate
order-certification LPs from cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"

_PIVOT_EPS = 1e-9
_COST_TOL = 1e-9
_DEGENERATE_RUN = 64


class LpError(RuntimeError):
    pass


@dataclass(frozen=True)
class LpResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int


def solve_lp(c, A, b, max_iter: int | None = None) -> LpResult:
    """Minimize c.x over {A x <= b, x >= 0}; requires b >= 0."""
    c = np.asarray(c, dtype=np.float64).ravel()
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    if A.ndim != 2 or A.shape != (b.size, c.size):
        raise LpError(f"shape mismatch: A {A.shape}, b {b.shape}, c {c.shape}")
    if np.any(b < 0):
        raise LpError("solve_lp requires b >= 0 (all-slack basis must be feasible)")
    m, n = A.shape
    if max_iter is None:
        max_iter = 200 * (m + n)

    # Tableau: columns = structural vars, slacks, rhs; last row = reduced costs.
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = A
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[m, :n] = c
    basis = np.arange(n, n + m)

    bland = False
    degenerate_run = 0
    for iteration in range(1, max_iter + 1):
        costs = tableau[m, : n + m]
        if bland:
            candidates = np.nonzero(costs < -_COST_TOL)[0]
            if candidates.size == 0:
                return _extract(tableau, basis, n, m, iteration)
            enter = int(candidates[0])
        else:
            enter = int(np.argmin(costs))
            if costs[enter] >= -_COST_TOL:
                return _extract(tableau, basis, n, m, iteration)

        column = tableau[:m, enter]
        positive = column > _PIVOT_EPS
        if not positive.any():
            return LpResult(UNBOUNDED, np.full(n, np.nan), -np.inf, iteration)
        ratios = np.full(m, np.inf)
        ratios[positive] = tableau[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + _PIVOT_EPS * (1.0 + abs(best)))[0]
        # Bland tie-break: leave the basic variable with the smallest index.
        leave = int(ties[np.argmin(basis[ties])])

        if best <= _PIVOT_EPS:
            degenerate_run += 1
            if degenerate_run >= _DEGENERATE_RUN:
                bland = True
        else:
            degenerate_run = 0

        pivot = tableau[leave, enter]
        tableau[leave] /= pivot
        factors = tableau[:, enter].copy()
        factors[leave] = 0.0
        tableau -= np.outer(factors, tableau[leave])
        tableau[:, enter] = 0.0
        tableau[leave, enter] = 1.0
        basis[leave] = enter

    return _extract(tableau, basis, n, m, max_iter, status=ITERATION_LIMIT)


def _extract(tableau, basis, n, m, iterations, status=OPTIMAL) -> LpResult:
    x = np.zeros(n)
    for row, var in enumerate(basis):
        if var < n:
            x[var] = tableau[row, -1]
    return LpResult(status, x, float(-tableau[m, -1]), iterations)
