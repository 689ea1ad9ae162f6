"""Solver wrappers checked against independent oracles.

The linear solver is compared with brute-force vertex enumeration on random
feasible boxes; the quadratic solver is compared with a sequential
least-squares solve from a different library. Instances are generated around
a known interior point so feasibility holds by construction.
"""

import itertools

import numpy as np
import pytest
from scipy.optimize import minimize

from rfimdiqkd.core import EstimationInfeasibleError
from rfimdiqkd.lpkit import ConvexQuadraticProgram, LinearProgram, Row, solve_cqp, solve_lp


def _random_lp(rng: np.random.Generator, dim: int, n_rows: int) -> LinearProgram:
    var_lower = tuple(rng.uniform(-1.0, 0.0, dim))
    var_upper = tuple(rng.uniform(0.5, 2.0, dim))
    interior = np.array([rng.uniform(lo, hi) for lo, hi in zip(var_lower, var_upper)])
    rows = []
    for _ in range(n_rows):
        coeffs = rng.uniform(-2.0, 2.0, dim)
        value = float(coeffs @ interior)
        lower = value - rng.uniform(0.05, 1.5)
        upper = value + rng.uniform(0.05, 1.5)
        which = rng.integers(0, 3)
        rows.append(
            Row(
                coeffs=tuple(coeffs),
                lower=None if which == 1 else lower,
                upper=None if which == 2 else upper,
            )
        )
    return LinearProgram(
        objective=tuple(rng.uniform(-1.0, 1.0, dim)),
        var_lower=var_lower,
        var_upper=var_upper,
        rows=tuple(rows),
        maximize=bool(rng.integers(0, 2)),
    )


def _vertex_enumeration_optimum(problem: LinearProgram) -> float:
    dim = len(problem.objective)
    planes: list[tuple[np.ndarray, float]] = []
    for i in range(dim):
        unit = np.zeros(dim)
        unit[i] = 1.0
        planes.append((unit.copy(), problem.var_lower[i]))
        planes.append((unit.copy(), problem.var_upper[i]))
    for row in problem.rows:
        coeffs = np.asarray(row.coeffs)
        if row.lower is not None:
            planes.append((coeffs, row.lower))
        if row.upper is not None:
            planes.append((coeffs, row.upper))

    def feasible(x: np.ndarray) -> bool:
        tol = 1e-9
        if np.any(x < np.asarray(problem.var_lower) - tol):
            return False
        if np.any(x > np.asarray(problem.var_upper) + tol):
            return False
        for row in problem.rows:
            v = float(np.asarray(row.coeffs) @ x)
            if row.lower is not None and v < row.lower - tol:
                return False
            if row.upper is not None and v > row.upper + tol:
                return False
        return True

    best = None
    objective = np.asarray(problem.objective)
    for subset in itertools.combinations(range(len(planes)), dim):
        a = np.array([planes[i][0] for i in subset])
        b = np.array([planes[i][1] for i in subset])
        try:
            x = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            continue
        if not feasible(x):
            continue
        value = float(objective @ x)
        if best is None:
            best = value
        elif problem.maximize:
            best = max(best, value)
        else:
            best = min(best, value)
    assert best is not None, "generator produced an instance with no vertex"
    return best


def test_lp_matches_vertex_enumeration():
    rng = np.random.default_rng(20240822)
    for trial in range(100):
        dim = int(rng.integers(2, 5))
        problem = _random_lp(rng, dim, int(rng.integers(1, 4)))
        got = solve_lp(problem).value
        want = _vertex_enumeration_optimum(problem)
        assert got == pytest.approx(want, rel=1e-8, abs=1e-8), f"instance {trial}"


def test_lp_reports_infeasible():
    problem = LinearProgram(
        objective=(1.0,),
        var_lower=(0.0,),
        var_upper=(1.0,),
        rows=(Row(coeffs=(1.0,), lower=2.0, upper=3.0),),
        maximize=True,
    )
    with pytest.raises(EstimationInfeasibleError):
        solve_lp(problem)


def test_lp_solution_is_feasible_and_attains_value():
    rng = np.random.default_rng(7)
    problem = _random_lp(rng, 4, 3)
    sol = solve_lp(problem)
    x = np.asarray(sol.x)
    assert np.all(x >= np.asarray(problem.var_lower) - 1e-9)
    assert np.all(x <= np.asarray(problem.var_upper) + 1e-9)
    assert float(np.asarray(problem.objective) @ x) == pytest.approx(sol.value, abs=1e-10)


def _random_cqp(rng: np.random.Generator, dim: int, n_rows: int) -> ConvexQuadraticProgram:
    base = _random_lp(rng, dim, n_rows)
    return ConvexQuadraticProgram(
        weights=tuple(rng.uniform(0.2, 3.0, dim)),
        centers=tuple(rng.uniform(-1.5, 2.5, dim)),
        var_lower=base.var_lower,
        var_upper=base.var_upper,
        rows=base.rows,
    )


def _slsqp_optimum(problem: ConvexQuadraticProgram) -> float:
    dim = len(problem.weights)
    w = np.asarray(problem.weights)
    c = np.asarray(problem.centers)
    constraints = []
    for row in problem.rows:
        coeffs = np.asarray(row.coeffs)
        if row.lower is not None:
            constraints.append({"type": "ineq", "fun": lambda x, a=coeffs, b=row.lower: a @ x - b})
        if row.upper is not None:
            constraints.append({"type": "ineq", "fun": lambda x, a=coeffs, b=row.upper: b - a @ x})
    lower = np.asarray(problem.var_lower)
    upper = np.asarray(problem.var_upper)
    # SLSQP can stall from a start point that violates the rows, so try a few
    # spread across the box and keep the best converged run
    starts = [
        0.5 * (lower + upper),
        np.clip(c, lower, upper),
        lower + 0.25 * (upper - lower),
        lower + 0.75 * (upper - lower),
    ]
    best = None
    for x0 in starts:
        result = minimize(
            lambda x: float(w @ (x - c) ** 2),
            x0,
            jac=lambda x: 2.0 * w * (x - c),
            bounds=list(zip(problem.var_lower, problem.var_upper)),
            constraints=constraints,
            method="SLSQP",
            options={"maxiter": 400, "ftol": 1e-14},
        )
        if result.success:
            value = float(result.fun)
            best = value if best is None else min(best, value)
    assert best is not None, "no SLSQP start converged"
    return best


def test_cqp_matches_slsqp():
    rng = np.random.default_rng(31415)
    for trial in range(20):
        dim = int(rng.integers(2, 5))
        problem = _random_cqp(rng, dim, int(rng.integers(1, 4)))
        got = solve_cqp(problem).value
        want = _slsqp_optimum(problem)
        assert got == pytest.approx(want, rel=1e-4, abs=1e-6), f"instance {trial}"


def test_cqp_unconstrained_center_inside_box():
    problem = ConvexQuadraticProgram(
        weights=(1.0, 2.0),
        centers=(0.3, 0.6),
        var_lower=(0.0, 0.0),
        var_upper=(1.0, 1.0),
        rows=(),
    )
    sol = solve_cqp(problem)
    assert sol.value == pytest.approx(0.0, abs=1e-10)
    assert sol.x == pytest.approx((0.3, 0.6), abs=1e-6)


def test_cqp_pinned_variable():
    # degenerate box: one coordinate fixed at its bound
    problem = ConvexQuadraticProgram(
        weights=(1.0, 1.0),
        centers=(0.9, 0.9),
        var_lower=(0.5, 0.0),
        var_upper=(0.5, 1.0),
        rows=(Row(coeffs=(1.0, 1.0), lower=None, upper=1.2),),
    )
    sol = solve_cqp(problem)
    assert sol.x[0] == pytest.approx(0.5, abs=1e-9)
    assert sol.x[1] == pytest.approx(0.7, abs=1e-6)


def test_cqp_reports_infeasible():
    problem = ConvexQuadraticProgram(
        weights=(1.0,),
        centers=(0.0,),
        var_lower=(0.0,),
        var_upper=(1.0,),
        rows=(Row(coeffs=(1.0,), lower=1.5, upper=2.0),),
    )
    with pytest.raises(EstimationInfeasibleError):
        solve_cqp(problem)
