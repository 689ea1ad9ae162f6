"""Thin solver layer for the small programs built by the estimators.

Two problem shapes cover everything downstream:

* ``LinearProgram``: optimize c.x subject to per-variable boxes and two-sided
  linear row constraints. Solved with scipy's HiGHS backend.
* ``ConvexQuadraticProgram``: minimize a separable quadratic
  sum_i a_i (x_i - center_i)^2 under the same constraint shape. Solved with
  cvxopt's interior-point QP after a small presolve that eliminates pinned
  variables (cvxopt needs a strictly feasible interior).

Problems here have at most a few dozen variables, so robustness and
determinism matter more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import SolverError, EstimationInfeasibleError

__all__ = [
    "ConvexQuadraticProgram",
    "LinearProgram",
    "Row",
    "Solution",
    "solve_cqp",
    "solve_lp",
]


@dataclass(frozen=True)
class Row:
    """One two-sided linear constraint: lower <= coeffs . x <= upper.

    Either side may be None (unbounded)."""

    coeffs: tuple[float, ...]
    lower: float | None = None
    upper: float | None = None


@dataclass
class LinearProgram:
    """Boxed variables, two-sided rows, linear objective."""

    objective: tuple[float, ...]
    var_lower: tuple[float, ...]
    var_upper: tuple[float, ...]
    rows: list[Row] = field(default_factory=list)
    maximize: bool = False


@dataclass
class ConvexQuadraticProgram:
    """Minimize sum_i weights[i] * (x[i] - centers[i])**2 over the same
    feasible shape as :class:`LinearProgram`. All weights must be > 0."""

    weights: tuple[float, ...]
    centers: tuple[float, ...]
    var_lower: tuple[float, ...]
    var_upper: tuple[float, ...]
    rows: list[Row] = field(default_factory=list)


@dataclass(frozen=True)
class Solution:
    value: float
    x: tuple[float, ...]


def _stack_rows(rows: list[Row], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Convert two-sided rows into A x <= b form."""
    blocks = []
    rhs = []
    for row in rows:
        coeffs = np.asarray(row.coeffs, dtype=float)
        if coeffs.shape != (n,):
            raise ValueError(f"row has {coeffs.shape} coefficients, expected {n}")
        if row.upper is not None:
            blocks.append(coeffs)
            rhs.append(row.upper)
        if row.lower is not None:
            blocks.append(-coeffs)
            rhs.append(-row.lower)
    if not blocks:
        return np.zeros((0, n)), np.zeros(0)
    return np.vstack(blocks), np.asarray(rhs, dtype=float)


def solve_lp(problem: LinearProgram) -> Solution:
    """Solve to optimality or raise.

    Raises:
        EstimationInfeasibleError: the constraints admit no point.
        SolverError: the backend failed for any other reason.
    """
    n = len(problem.objective)
    c = np.asarray(problem.objective, dtype=float)
    if problem.maximize:
        c = -c
    a_ub, b_ub = _stack_rows(problem.rows, n)
    bounds = list(zip(problem.var_lower, problem.var_upper))
    # HiGHS occasionally stalls with model_status Unknown on badly scaled
    # instances; the simplex and interior-point variants do not share the
    # failure mode, so walk through them before giving up.
    result = None
    for method in ("highs", "highs-ds", "highs-ipm"):
        result = linprog(c, A_ub=a_ub if a_ub.size else None, b_ub=b_ub if b_ub.size else None,
                         bounds=bounds, method=method)
        if result.status in (0, 2):
            break
    if result.status == 2:
        raise EstimationInfeasibleError("linear program is infeasible")
    if result.status != 0:
        raise SolverError(f"linear solver failed with status {result.status}: {result.message}")
    value = float(result.fun)
    if problem.maximize:
        value = -value
    return Solution(value=value, x=tuple(float(v) for v in result.x))


def _box_only_minimum(weights: np.ndarray, centers: np.ndarray,
                      lower: np.ndarray, upper: np.ndarray) -> Solution:
    x = np.clip(centers, lower, upper)
    value = float(np.sum(weights * (x - centers) ** 2))
    return Solution(value=value, x=tuple(float(v) for v in x))


def _require_feasible(a: np.ndarray, b: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> None:
    n = lower.size
    probe = LinearProgram(
        objective=tuple(0.0 for _ in range(n)),
        var_lower=tuple(float(v) for v in lower),
        var_upper=tuple(float(v) for v in upper),
        rows=[Row(coeffs=tuple(float(c) for c in a[i]), upper=float(b[i])) for i in range(a.shape[0])],
    )
    solve_lp(probe)


def solve_cqp(problem: ConvexQuadraticProgram) -> Solution:
    """Global minimum of a separable convex quadratic over boxes and rows.

    Variables whose box has zero width are substituted out before the
    interior-point call; a problem with no rows reduces to an exact
    per-coordinate clamp.
    """
    import cvxopt

    weights = np.asarray(problem.weights, dtype=float)
    centers = np.asarray(problem.centers, dtype=float)
    lower = np.asarray(problem.var_lower, dtype=float)
    upper = np.asarray(problem.var_upper, dtype=float)
    n = weights.size
    if np.any(weights <= 0.0):
        raise ValueError("quadratic weights must be strictly positive")
    if np.any(lower > upper + 1e-15):
        raise EstimationInfeasibleError("variable box is empty")

    free = (upper - lower) > 1e-14
    pinned_value = np.where(free, 0.0, (lower + upper) / 2.0)

    a_full, b_full = _stack_rows(problem.rows, n)
    if a_full.size:
        b_fixed = b_full - a_full @ pinned_value
        a_free = a_full[:, free]
        live = np.any(np.abs(a_free) > 0.0, axis=1)
        if np.any(b_fixed[~live] < -1e-9):
            raise EstimationInfeasibleError("pinned variables violate a row constraint")
        a_free = a_free[live]
        b_free = b_fixed[live]
    else:
        a_free = np.zeros((0, int(np.count_nonzero(free))))
        b_free = np.zeros(0)

    pinned_cost = float(np.sum(weights[~free] * (pinned_value[~free] - centers[~free]) ** 2))

    if not np.any(free):
        return Solution(value=pinned_cost, x=tuple(float(v) for v in pinned_value))

    w = weights[free]
    ce = centers[free]
    lo = lower[free]
    hi = upper[free]

    if a_free.size == 0:
        inner = _box_only_minimum(w, ce, lo, hi)
    else:
        clamp = np.clip(ce, lo, hi)
        slack = a_free @ clamp - b_free
        if np.all(slack <= 1e-12):
            # Row constraints are inactive at the box optimum.
            inner = _box_only_minimum(w, ce, lo, hi)
        else:
            m = w.size
            p_mat = cvxopt.matrix(np.diag(2.0 * w))
            q_vec = cvxopt.matrix(-2.0 * w * ce)
            g_mat = cvxopt.matrix(np.vstack([a_free, np.eye(m), -np.eye(m)]))
            h_vec = cvxopt.matrix(np.concatenate([b_free, hi, -lo]))
            options = {
                "show_progress": False,
                "maxiters": 200,
                "abstol": 1e-10,
                "reltol": 1e-10,
                "feastol": 1e-9,
            }
            try:
                result = cvxopt.solvers.qp(p_mat, q_vec, G=g_mat, h=h_vec, options=options)
            except (ValueError, ArithmeticError) as exc:
                # cvxopt can abort mid-iteration instead of reporting
                # infeasibility; classify with a zero-objective LP
                _require_feasible(a_free, b_free, lo, hi)
                raise SolverError(f"quadratic solver failed: {exc}") from exc
            if result["status"] == "primal infeasible":
                raise EstimationInfeasibleError("quadratic program is infeasible")
            if result["status"] != "optimal":
                raise SolverError(f"quadratic solver returned status {result['status']!r}")
            x = np.clip(np.asarray(result["x"]).ravel(), lo, hi)
            value = float(np.sum(w * (x - ce) ** 2))
            inner = Solution(value=value, x=tuple(float(v) for v in x))

    x_full = pinned_value.copy()
    x_full[free] = inner.x
    return Solution(value=pinned_cost + inner.value, x=tuple(float(v) for v in x_full))
