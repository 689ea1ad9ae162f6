import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rfimdiqkd.core import IntensityPlan, OriginalPlan
from rfimdiqkd.optimizer import (
    PsoConfig,
    improved_plan_bounds,
    optimize,
    optimize_plan,
    original_plan_bounds,
    plan_from_vector,
    vector_from_plan,
)
from rfimdiqkd.optimizer import _repair_factory


def test_plan_vector_round_trip(improved_plan, original_plan):
    for plan in (improved_plan, original_plan):
        protocol = "improved" if isinstance(plan, IntensityPlan) else "original"
        back = plan_from_vector(np.asarray(vector_from_plan(plan)), protocol)
        assert back == plan


@given(st.lists(st.floats(min_value=-2.0, max_value=3.0), min_size=6, max_size=6))
@settings(max_examples=100, deadline=None)
def test_repaired_improved_vectors_build_valid_plans(raw):
    repair = _repair_factory("improved")
    fixed = repair(np.asarray(raw))
    plan = plan_from_vector(fixed, "improved")  # must not raise
    assert plan.omega < plan.nu
    assert plan.pr_mu + plan.pr_nu + plan.pr_omega < 1.0


@given(st.lists(st.floats(min_value=-2.0, max_value=3.0), min_size=5, max_size=5))
@settings(max_examples=100, deadline=None)
def test_repaired_original_vectors_build_valid_plans(raw):
    repair = _repair_factory("original")
    fixed = repair(np.asarray(raw))
    plan = plan_from_vector(fixed, "original")
    assert plan.omega < plan.nu
    assert plan.pr_nu + plan.pr_omega < 1.0


def test_repair_is_identity_on_feasible_points(improved_plan):
    repair = _repair_factory("improved")
    x = np.asarray(vector_from_plan(improved_plan))
    assert np.allclose(repair(x), x)


def test_swarm_finds_a_separable_quadratic_peak():
    target = np.array([0.3, 0.7, 0.1])
    result = optimize(
        lambda x: -float(np.sum((x - target) ** 2)),
        lower=(0.0, 0.0, 0.0),
        upper=(1.0, 1.0, 1.0),
        cfg=PsoConfig(swarm_size=20, iterations=60, seed=4),
    )
    assert result.best_value == pytest.approx(0.0, abs=1e-4)
    assert np.allclose(result.best_vector, target, atol=0.02)


def test_swarm_is_seed_deterministic():
    def objective(x):
        return -float(np.sum(x**2))

    kwargs = dict(lower=(-1.0,) * 4, upper=(1.0,) * 4, cfg=PsoConfig(swarm_size=8, iterations=20, seed=9))
    a = optimize(objective, **kwargs)
    b = optimize(objective, **kwargs)
    assert a.best_vector == b.best_vector
    assert a.trace == b.trace


def test_trace_is_monotone_nondecreasing():
    rng_free = optimize(
        lambda x: float(np.sum(np.sin(5.0 * x))),
        lower=(0.0, 0.0),
        upper=(2.0, 2.0),
        cfg=PsoConfig(swarm_size=10, iterations=30, seed=2),
    )
    for a, b in zip(rng_free.trace, rng_free.trace[1:]):
        assert b >= a


def test_plan_search_never_loses_the_warm_start(improved_plan):
    # degenerate objective: rate of the warm start is the global optimum
    start = np.asarray(vector_from_plan(improved_plan))

    def rate_of(plan):
        x = np.asarray(vector_from_plan(plan))
        return -float(np.sum((x - start) ** 2))

    best, result = optimize_plan(
        rate_of, "improved", PsoConfig(swarm_size=6, iterations=5, seed=1), initial_plans=[improved_plan]
    )
    assert result.best_value == pytest.approx(0.0, abs=1e-12)
    assert best == improved_plan


def test_plan_bounds_have_matching_dimensions():
    lo, hi = improved_plan_bounds()
    assert len(lo) == len(hi) == 6
    lo, hi = original_plan_bounds()
    assert len(lo) == len(hi) == 5
