"""Per-basis decoy estimation against forward-model inversion oracles.

The yield combination is exact whenever no pulse pair carries four or more
photons in total, and the error combination is exact whenever only the
single-photon term survives outside the vacuum row and column. The oracles
below generate synthetic statistics from a known photon-number response and
demand exact recovery in those regimes, and one-sided deviation outside them.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rfimdiqkd.channel import expected_statistics, single_photon_truth
from rfimdiqkd.core import StatCell, StatTable, poisson_pmf
from rfimdiqkd.original import (
    YIELD_CELL_ORDER,
    decoy_denominator,
    decoy_numerator_coefficients,
    estimate_E_original,
    estimate_y11_original,
    original_pipeline,
    y11_asymptotic,
)

_BIG_N = 10**12


def _forward_gains(nu: float, omega: float, yields: np.ndarray) -> dict[tuple[str, str], float]:
    """Q for each intensity pair from a (k_max+1)x(k_max+1) yield matrix."""
    k_max = yields.shape[0] - 1
    value_of = {"nu": nu, "omega": omega, "o": 0.0}
    gains = {}
    for pair in YIELD_CELL_ORDER:
        la, lb = value_of[pair[0]], value_of[pair[1]]
        total = 0.0
        for n in range(k_max + 1):
            for m in range(k_max + 1):
                total += poisson_pmf(la, n) * poisson_pmf(lb, m) * yields[n, m]
        gains[pair] = total
    return gains


def _table_from_gains(nu: float, omega: float, gains, errors=None) -> StatTable:
    table = StatTable(kind="observed", intensities={"nu": nu, "omega": omega, "o": 0.0}, cells={})
    for pair in YIELD_CELL_ORDER:
        q = gains[pair]
        t = errors[pair] if errors is not None else q / 3.0
        table.set_cell(pair[0], pair[1], "XX", StatCell(n=_BIG_N, q=q, t=t))
    return table


def test_denominator_positive_for_ordered_intensities():
    for nu, omega in ((0.2, 0.05), (0.5, 0.1), (0.9, 0.3)):
        assert decoy_denominator(nu, omega) > 0.0


def test_numerator_weights_single_photons_by_the_denominator():
    nu, omega = 0.3, 0.07
    coeffs = decoy_numerator_coefficients(nu, omega)
    p1 = {"nu": poisson_pmf(nu, 1), "omega": poisson_pmf(omega, 1), "o": 0.0}
    weight_11 = sum(coeffs[pair] * p1[pair[0]] * p1[pair[1]] for pair in coeffs)
    assert weight_11 == pytest.approx(decoy_denominator(nu, omega), rel=1e-12)


def test_three_photon_terms_cancel_exactly():
    nu, omega = 0.3, 0.07
    coeffs = decoy_numerator_coefficients(nu, omega)
    value_of = {"nu": nu, "omega": omega, "o": 0.0}
    for n, m in ((1, 2), (2, 1), (0, 3), (3, 0)):
        weight = sum(
            coeffs[pair]
            * poisson_pmf(value_of[pair[0]], n)
            * poisson_pmf(value_of[pair[1]], m)
            for pair in coeffs
        )
        assert weight == pytest.approx(0.0, abs=1e-18), (n, m)


def test_four_photon_terms_carry_negative_weight():
    nu, omega = 0.3, 0.07
    coeffs = decoy_numerator_coefficients(nu, omega)
    value_of = {"nu": nu, "omega": omega, "o": 0.0}
    for n, m in ((2, 2), (1, 3), (3, 1), (0, 4), (4, 0)):
        weight = sum(
            coeffs[pair]
            * poisson_pmf(value_of[pair[0]], n)
            * poisson_pmf(value_of[pair[1]], m)
            for pair in coeffs
        )
        assert weight < 0.0, (n, m)


@given(
    st.floats(min_value=0.1, max_value=0.8),
    st.floats(min_value=0.1, max_value=0.9),
    st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=9, max_size=9),
)
@settings(max_examples=60, deadline=None)
def test_yield_recovery_is_exact_below_four_photons(nu, ratio, entries):
    omega = nu * ratio * 0.9 + 1e-3
    if omega >= nu:
        return
    yields = np.zeros((4, 4))
    slots = [(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (1, 2), (2, 1), (3, 0)]
    for slot, value in zip(slots, entries):
        yields[slot] = value
    table = _table_from_gains(nu, omega, _forward_gains(nu, omega, yields))
    got = estimate_y11_original(table, "XX", None)
    assert got == pytest.approx(min(1.0, yields[1, 1]), abs=1e-10)


def test_yield_bound_drops_below_truth_with_four_photon_load():
    nu, omega = 0.4, 0.1
    yields = np.zeros((5, 5))
    yields[1, 1] = 0.3
    yields[2, 2] = 0.8
    yields[0, 4] = 0.5
    table = _table_from_gains(nu, omega, _forward_gains(nu, omega, yields))
    got = estimate_y11_original(table, "XX", None)
    assert got < 0.3 - 1e-6


def test_error_recovery_is_exact_on_vacuum_bordered_support():
    nu, omega = 0.35, 0.08
    rng = np.random.default_rng(12)
    error_yields = np.zeros((4, 4))
    error_yields[0, :] = rng.uniform(0.0, 0.4, 4)
    error_yields[:, 0] = rng.uniform(0.0, 0.4, 4)
    error_yields[1, 1] = 0.27
    gains = _forward_gains(nu, omega, np.full((4, 4), 0.9))
    errors = _forward_gains(nu, omega, error_yields)
    table = _table_from_gains(nu, omega, gains, errors)
    for lam in ("nu", "omega"):
        got = estimate_E_original(table, "XX", lam, None)
        assert got == pytest.approx(0.27, abs=1e-10), lam


def test_error_bound_only_overestimates_with_multiphoton_load():
    nu, omega = 0.35, 0.08
    error_yields = np.zeros((4, 4))
    error_yields[1, 1] = 0.2
    error_yields[2, 1] = 0.3
    gains = _forward_gains(nu, omega, np.full((4, 4), 0.9))
    errors = _forward_gains(nu, omega, error_yields)
    table = _table_from_gains(nu, omega, gains, errors)
    assert estimate_E_original(table, "XX", "nu", None) > 0.2


def test_finite_interval_bound_approaches_closed_form():
    nu, omega = 0.3, 0.07
    yields = np.zeros((4, 4))
    yields[0, 0] = 1e-6
    yields[0, 1] = yields[1, 0] = 0.01
    yields[1, 1] = 0.05
    gains = _forward_gains(nu, omega, yields)
    table = StatTable(kind="observed", intensities={"nu": nu, "omega": omega, "o": 0.0}, cells={})
    for pair in YIELD_CELL_ORDER:
        table.set_cell(pair[0], pair[1], "XX", StatCell(n=10**16, q=gains[pair], t=gains[pair] / 3))
    tight = estimate_y11_original(table, "XX", 1e-7)
    exact = estimate_y11_original(table, "XX", None)
    assert tight <= exact + 1e-15
    assert tight == pytest.approx(exact, rel=1e-3)


@pytest.fixture
def original_link(device, original_plan):
    from rfimdiqkd.channel import ChannelConfig

    return ChannelConfig(device=device, distance_km=10.0, plan=original_plan)


def test_interval_bound_never_exceeds_zero_width_bound(original_link):
    from rfimdiqkd.sampling import allocate, observe

    expected = expected_statistics(original_link)
    observed = observe(expected, allocate(original_link.plan, 10**11), mode="expected")
    for d in ("XX", "ZZ"):
        finite = estimate_y11_original(observed, d, 1e-7)
        zero = estimate_y11_original(observed, d, None)
        assert finite <= zero + 1e-15


def test_pipeline_contains_the_physical_truth(original_link):
    truth = single_photon_truth(original_link)
    expected = expected_statistics(original_link)
    estimates = original_pipeline(expected, None)
    for d, y in estimates.y11_lower.items():
        assert y <= truth.y11 + 1e-12, d
    for d in ("XX", "XY", "YX", "YY", "ZZ"):
        assert estimates.e11_upper[d] >= truth.e11[d] - 1e-12, d
    assert estimates.c_lower <= truth.c_value() + 1e-12


def test_asymptotic_helper_matches_zero_width_estimator(original_link):
    expected = expected_statistics(original_link)
    for d in ("XX", "YY", "ZZ"):
        helper = y11_asymptotic(expected, d)
        clamped = min(1.0, max(0.0, helper))
        assert clamped == pytest.approx(estimate_y11_original(expected, d, None), abs=1e-15)
