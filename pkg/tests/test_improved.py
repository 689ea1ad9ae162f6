"""Joint-basis estimation: pooling identities, containment, and the measured
advantage over the per-pairing baseline on the same data."""

import dataclasses
import math

import pytest

from rfimdiqkd.channel import ChannelConfig, expected_statistics, single_photon_truth
from rfimdiqkd.core import DeviceParams, IntensityPlan
from rfimdiqkd.improved import (
    estimate_c_improved,
    estimate_y11_joint,
    estimate_y11_per_basis,
    improved_pipeline,
    per_basis_estimates,
    pooled_decoy_cell,
)
from rfimdiqkd.sampling import allocate, observe


def _observe_at(link, n_tot, seed=None, mode="expected"):
    expected = expected_statistics(link)
    return observe(expected, allocate(link.plan, n_tot), mode=mode, seed=seed)


def test_pooled_cell_merges_matched_pairings(short_link):
    table = expected_statistics(short_link)
    merged = pooled_decoy_cell(table, "nu", "nu")
    parts = [table.cell("nu", "nu", d) for d in ("XX", "XY", "YX", "YY")]
    total_n = sum(p.n for p in parts)
    assert merged.n == total_n
    assert merged.q == pytest.approx(sum(p.n * p.q for p in parts) / total_n, rel=1e-12)
    assert merged.t == pytest.approx(sum(p.n * p.t for p in parts) / total_n, rel=1e-12)


def test_pooled_cell_projects_one_sided_rows(short_link):
    table = expected_statistics(short_link)
    merged = pooled_decoy_cell(table, "nu", "o")
    parts = [table.cell("nu", "o", b) for b in ("X", "Y")]
    assert merged.n == sum(p.n for p in parts)
    # a single-pairing label needs only the matching one-sided projection
    single = pooled_decoy_cell(table, "nu", "o", "XX")
    lone = table.cell("nu", "o", "X")
    assert (single.n, single.q) == (lone.n, lone.q)


def test_pooled_vacuum_cell_is_shared(short_link):
    table = expected_statistics(short_link)
    assert pooled_decoy_cell(table, "o", "o") is table.cell("o", "o", "none")


def test_joint_yield_contains_truth_at_zero_width(short_link):
    truth = single_photon_truth(short_link)
    table = expected_statistics(short_link)
    value = estimate_y11_joint(table, None)
    assert 0.0 < value <= truth.y11 + 1e-12


def test_joint_beats_every_pairing_at_realistic_sizes(short_link):
    observed = _observe_at(short_link, 10**10)
    joint = estimate_y11_joint(observed, 1e-7)
    best_single = max(
        estimate_y11_per_basis(observed, d, 1e-7) for d in ("XX", "XY", "YX", "YY")
    )
    assert joint > best_single


def test_joint_survives_data_starvation_where_pairings_collapse(short_link):
    observed = _observe_at(short_link, 10**9)
    assert estimate_y11_joint(observed, 1e-7) > 0.0
    assert max(
        estimate_y11_per_basis(observed, d, 1e-7) for d in ("XX", "XY", "YX", "YY")
    ) == 0.0


def test_pipeline_reports_give_up_values_without_light():
    device = DeviceParams.default()
    plan = IntensityPlan(mu=0.5, nu=0.2, omega=0.05, pr_mu=0.25, pr_nu=0.25, pr_omega=0.25)
    link = ChannelConfig(device=device, distance_km=10.0, plan=plan)
    observed = _observe_at(link, 10**6)
    estimates = improved_pipeline(observed, 1e-7)
    assert estimates.y11_lower == 0.0
    assert estimates.e11s_upper == 1.0
    assert estimates.c_lower == 0.0


def test_frame_quality_certificate_contains_truth(short_link):
    truth = single_photon_truth(short_link)
    table = expected_statistics(short_link)
    estimates = improved_pipeline(table, None)
    assert 0.0 < estimates.c_lower <= truth.c_value() + 1e-9


def test_frame_quality_certificate_contains_truth_when_misaligned(device, improved_plan):
    tilted = dataclasses.replace(device, beta_b=math.radians(25.0))
    link = ChannelConfig(device=tilted, distance_km=10.0, plan=improved_plan)
    truth = single_photon_truth(link)
    estimates = improved_pipeline(expected_statistics(link), None)
    assert estimates.c_lower <= truth.c_value() + 1e-9


def test_joint_frame_quality_beats_per_basis(short_link):
    observed = _observe_at(short_link, 10**10)
    imp = improved_pipeline(observed, 1e-7)
    base = per_basis_estimates(observed, 1e-7)
    assert imp.c_lower > base.c_lower


def test_signal_error_rate_contains_truth(short_link):
    truth = single_photon_truth(short_link)
    table = expected_statistics(short_link)
    estimates = improved_pipeline(table, None)
    assert estimates.e11s_upper >= truth.e11["ZZ"] - 1e-12


def test_c_estimator_gives_zero_without_yield():
    assert estimate_c_improved(0.0, {}, {}, 0.0) == 0.0


def test_interval_narrowing_is_monotone(short_link):
    # same data, bigger failure budget -> narrower intervals -> better bound
    observed = _observe_at(short_link, 10**10)
    loose = estimate_y11_joint(observed, 1e-10)
    tight = estimate_y11_joint(observed, 1e-4)
    zero = estimate_y11_joint(observed, None)
    assert loose <= tight <= zero + 1e-15
