"""Concentration intervals for counted detection events.

Given an observed event total X (successes among n trials, n large, per-trial
probability small), the true expectation E[X] is bracketed by

    lower = X - f((eps/2)^(3/2)) * sqrt(X)      (clamped at 0)
    upper = X + f((eps/2)^4 / 16) * sqrt(X)

with f(x) = sqrt(2 ln(1/x)), each side failing with probability at most eps.
The two tail arguments differ because the sides come from different relative
-deviation regimes; a symmetric variant using f(eps/2) on both sides is kept
for sensitivity checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BoundedObservable",
    "chernoff_interval",
    "f_of",
    "lower_coefficient",
    "upper_coefficient",
]


def f_of(x: float) -> float:
    """sqrt(2 ln(1/x)) for x in (0, 1]."""
    if not 0.0 < x <= 1.0:
        raise ValueError(f"tail argument must be in (0, 1], got {x}")
    return math.sqrt(2.0 * math.log(1.0 / x))


def upper_coefficient(epsilon: float) -> float:
    return f_of((epsilon / 2.0) ** 4 / 16.0)


def lower_coefficient(epsilon: float) -> float:
    return f_of((epsilon / 2.0) ** 1.5)


def symmetric_coefficient(epsilon: float) -> float:
    return f_of(epsilon / 2.0)


@dataclass(frozen=True, slots=True)
class BoundedObservable:
    """An event total together with its confidence interval."""

    observed_total: float
    lower: float
    upper: float
    epsilon: float


def chernoff_interval(observed_total: float, epsilon: float, symmetric: bool = False) -> BoundedObservable:
    """Two-sided interval around an observed event total.

    Args:
        observed_total: X >= 0; need not be an integer (expected-value runs
            produce fractional totals).
        epsilon: per-side failure probability, in (0, 1).
        symmetric: use f(eps/2) for both sides instead of the default
            asymmetric pair of tail arguments.
    """
    if observed_total < 0.0:
        raise ValueError(f"event total must be >= 0, got {observed_total}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if symmetric:
        up = lo = symmetric_coefficient(epsilon)
    else:
        up = upper_coefficient(epsilon)
        lo = lower_coefficient(epsilon)
    root = math.sqrt(observed_total)
    return BoundedObservable(
        observed_total=observed_total,
        lower=max(0.0, observed_total - lo * root),
        upper=observed_total + up * root,
        epsilon=epsilon,
    )
