"""Particle-swarm search over source plans.

Key rate as a function of intensities and selection probabilities is
non-convex (the estimators clamp, the leakage bound has corners), so a
gradient-free swarm works well. The search space is a box; candidate
vectors are repaired into the feasible region after every move: decoy
ordering is restored by shrinking omega below nu, and selection
probabilities are rescaled into the simplex while keeping a vacuum floor.

Runs are deterministic for a fixed seed: one generator drives every draw,
particles are updated in index order, and ties keep the earlier best.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    EstimationInfeasibleError,
    IntensityPlan,
    OriginalPlan,
    ParameterValidationError,
    SolverError,
)

__all__ = [
    "OptimizationResult",
    "PsoConfig",
    "improved_plan_bounds",
    "optimize",
    "optimize_plan",
    "original_plan_bounds",
    "plan_from_vector",
    "vector_from_plan",
]

# Order of plan coordinates in optimization vectors.
_IMPROVED_FIELDS = ("mu", "nu", "omega", "pr_mu", "pr_nu", "pr_omega")
_ORIGINAL_FIELDS = ("nu", "omega", "pr_z", "pr_nu", "pr_omega")

_PROB_FLOOR = 1e-3
_VACUUM_FLOOR = 1e-3
_OMEGA_MARGIN = 0.95  # repaired omega stays below this fraction of nu


@dataclass(frozen=True)
class PsoConfig:
    """Swarm hyperparameters; the defaults suit the 5-6 dimensional plans."""

    swarm_size: int = 40
    iterations: int = 200
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.swarm_size < 2 or self.iterations < 1:
            raise ParameterValidationError("swarm needs >= 2 particles and >= 1 iteration")


@dataclass(frozen=True)
class OptimizationResult:
    """Best plan found, its objective value, and the search trace."""

    best_vector: tuple[float, ...]
    best_value: float
    trace: tuple[float, ...]
    evaluations: int


def improved_plan_bounds() -> tuple[tuple[float, ...], tuple[float, ...]]:
    lower = (1e-4, 1e-4, 1e-5, _PROB_FLOOR, _PROB_FLOOR, _PROB_FLOOR)
    upper = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    return lower, upper


def original_plan_bounds() -> tuple[tuple[float, ...], tuple[float, ...]]:
    lower = (1e-4, 1e-5, _PROB_FLOOR, _PROB_FLOOR, _PROB_FLOOR)
    upper = (1.0, 1.0, 1.0, 1.0, 1.0)
    return lower, upper


def plan_from_vector(vector: Sequence[float], protocol: str) -> IntensityPlan | OriginalPlan:
    values = [float(v) for v in vector]
    if protocol == "improved":
        return IntensityPlan(**dict(zip(_IMPROVED_FIELDS, values)))
    if protocol == "original":
        return OriginalPlan(**dict(zip(_ORIGINAL_FIELDS, values)))
    raise ParameterValidationError(f"unknown protocol {protocol!r}")


def vector_from_plan(plan: IntensityPlan | OriginalPlan) -> tuple[float, ...]:
    fields = _IMPROVED_FIELDS if isinstance(plan, IntensityPlan) else _ORIGINAL_FIELDS
    return tuple(getattr(plan, name) for name in fields)


def _repair_factory(protocol: str) -> Callable[[np.ndarray], np.ndarray]:
    if protocol == "improved":
        omega_index, nu_index = 2, 1
        prob_slice = slice(3, 6)
        simplex_cap = 1.0 - _VACUUM_FLOOR
    elif protocol == "original":
        omega_index, nu_index = 1, 0
        prob_slice = slice(3, 5)
        simplex_cap = 1.0 - _VACUUM_FLOOR
    else:
        raise ParameterValidationError(f"unknown protocol {protocol!r}")

    def repair(x: np.ndarray) -> np.ndarray:
        x = x.copy()
        lower, upper = (improved_plan_bounds() if protocol == "improved"
                        else original_plan_bounds())
        np.clip(x, np.asarray(lower), np.asarray(upper), out=x)
        if x[omega_index] >= _OMEGA_MARGIN * x[nu_index]:
            x[omega_index] = _OMEGA_MARGIN * x[nu_index]
        probs = np.maximum(x[prob_slice], _PROB_FLOOR)
        total = float(np.sum(probs))
        if total > simplex_cap:
            # Shrink only the mass above the floor so every share stays legal.
            k = probs.size
            budget = simplex_cap - k * _PROB_FLOOR
            probs = _PROB_FLOOR + (probs - _PROB_FLOOR) * budget / (total - k * _PROB_FLOOR)
        x[prob_slice] = probs
        return x

    return repair


def optimize(
    objective: Callable[[np.ndarray], float],
    lower: Sequence[float],
    upper: Sequence[float],
    cfg: PsoConfig,
    repair: Callable[[np.ndarray], np.ndarray] | None = None,
    initial: Sequence[Sequence[float]] | None = None,
) -> OptimizationResult:
    """Maximize ``objective`` over the box with a standard inertial swarm.

    ``initial`` seeds the first particles with known-good vectors (the rest
    are drawn uniformly); ``repair`` projects arbitrary vectors into the
    feasible set and is applied to every candidate before evaluation.
    """
    rng = np.random.default_rng(cfg.seed)
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    dim = lo.size
    swarm = rng.uniform(lo, hi, size=(cfg.swarm_size, dim))
    if initial is not None:
        for i, vec in enumerate(initial[: cfg.swarm_size]):
            swarm[i] = np.asarray(vec, dtype=float)
    if repair is not None:
        swarm = np.array([repair(p) for p in swarm])
    velocity = rng.uniform(-0.1, 0.1, size=(cfg.swarm_size, dim)) * (hi - lo)

    values = np.array([objective(p) for p in swarm])
    evaluations = cfg.swarm_size
    personal_best = swarm.copy()
    personal_value = values.copy()
    best_index = int(np.argmax(personal_value))
    global_best = personal_best[best_index].copy()
    global_value = float(personal_value[best_index])
    trace = [global_value]

    for _ in range(cfg.iterations):
        r_cog = rng.random((cfg.swarm_size, dim))
        r_soc = rng.random((cfg.swarm_size, dim))
        velocity = (
            cfg.inertia * velocity
            + cfg.cognitive * r_cog * (personal_best - swarm)
            + cfg.social * r_soc * (global_best - swarm)
        )
        swarm = swarm + velocity
        np.clip(swarm, lo, hi, out=swarm)
        if repair is not None:
            swarm = np.array([repair(p) for p in swarm])
        values = np.array([objective(p) for p in swarm])
        evaluations += cfg.swarm_size
        improved_mask = values > personal_value
        personal_best[improved_mask] = swarm[improved_mask]
        personal_value[improved_mask] = values[improved_mask]
        best_index = int(np.argmax(personal_value))
        if float(personal_value[best_index]) > global_value:
            global_value = float(personal_value[best_index])
            global_best = personal_best[best_index].copy()
        trace.append(global_value)

    return OptimizationResult(
        best_vector=tuple(float(v) for v in global_best),
        best_value=global_value,
        trace=tuple(trace),
        evaluations=evaluations,
    )


def optimize_plan(
    rate_of_plan: Callable[[IntensityPlan | OriginalPlan], float],
    protocol: str,
    cfg: PsoConfig,
    initial_plans: Sequence[IntensityPlan | OriginalPlan] | None = None,
) -> tuple[IntensityPlan | OriginalPlan, OptimizationResult]:
    """Search plan space for the best key rate of one protocol."""
    lower, upper = (improved_plan_bounds() if protocol == "improved"
                    else original_plan_bounds())
    repair = _repair_factory(protocol)

    def objective(x: np.ndarray) -> float:
        # candidates that the validators or the certificate programs reject
        # simply lose the comparison
        try:
            return rate_of_plan(plan_from_vector(x, protocol))
        except (ParameterValidationError, EstimationInfeasibleError, SolverError):
            return -1.0

    initial = None
    if initial_plans:
        initial = [vector_from_plan(p) for p in initial_plans]
    result = optimize(objective, lower, upper, cfg, repair=repair, initial=initial)
    return plan_from_vector(np.asarray(result.best_vector), protocol), result
