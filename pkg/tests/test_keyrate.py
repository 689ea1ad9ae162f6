"""Leakage bound and rate composition."""

import dataclasses
import math

import pytest
from hypothesis import given, settings, strategies as st

from rfimdiqkd.channel import ChannelConfig
from rfimdiqkd.core import DeviceParams, IntensityPlan, OriginalPlan
from rfimdiqkd.keyrate import (
    asymptotic_report,
    compute_uv,
    finite_report,
    ideal_asymptotic_report,
    information_leakage,
)


def test_uv_frozen_points():
    assert compute_uv(2.0, 0.0) == (1.0, 0.0)
    assert compute_uv(0.0, 0.3) == (0.0, 0.0)
    u, v = compute_uv(1.5, 0.02)
    assert u == pytest.approx(0.8836993916167741, rel=1e-12)
    assert v == 0.0
    assert compute_uv(0.5, 0.3) == (pytest.approx(0.7142857142857143, rel=1e-12), 0.0)
    # both arms clamp once the split leaves the unit ball
    assert compute_uv(1.8, 0.25) == (1.0, 1.0)


def test_uv_clamps_unphysical_inputs():
    assert compute_uv(-0.3, 0.1) == (0.0, 0.0)
    u, v = compute_uv(2.0, 1.0)
    assert u == 1.0 and v == 1.0


def test_leakage_endpoints():
    assert information_leakage(2.0, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert information_leakage(0.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert information_leakage(0.0, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_leakage_monotone_in_frame_quality():
    cs = [0.0, 0.25, 0.5, 1.0, 1.5, 1.9, 2.0]
    for e in (0.0, 0.02, 0.05, 0.1, 0.2, 0.4):
        values = [information_leakage(c, e) for c in cs]
        for a, b in zip(values, values[1:]):
            assert b <= a + 1e-12  # better frame quality never leaks more


@given(st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.0, max_value=0.5))
@settings(max_examples=200, deadline=None)
def test_leakage_stays_in_unit_interval(c, e):
    value = information_leakage(c, e)
    assert -1e-12 <= value <= 1.0 + 1e-12


def _fig_link(beta_deg=0.0, distance_km=10.0):
    device = DeviceParams.default(beta_b=math.radians(beta_deg))
    plan = IntensityPlan(mu=0.5, nu=0.2, omega=0.05, pr_mu=0.25, pr_nu=0.25, pr_omega=0.25)
    return ChannelConfig(device=device, distance_km=distance_km, plan=plan)


def test_ideal_rate_ignores_the_frame_angle():
    base = ideal_asymptotic_report(_fig_link(0.0)).rate
    assert base > 0.0
    for beta_deg in (5.0, 13.0, 25.0, 44.0):
        tilted = ideal_asymptotic_report(_fig_link(beta_deg)).rate
        assert tilted == pytest.approx(base, rel=1e-9), beta_deg


def test_estimated_chain_loses_to_the_ideal_limit():
    ideal = ideal_asymptotic_report(_fig_link()).rate
    chain = asymptotic_report(_fig_link()).rate
    assert 0.0 < chain < ideal


def test_finite_rate_approaches_the_chain_limit_from_below():
    link = _fig_link()
    chain = asymptotic_report(link).rate
    previous = 0.0
    for n_tot in (10**10, 10**12, 10**14, 10**16):
        rate = finite_report(link, n_tot, mode="expected").rate
        assert previous <= rate + 1e-18
        assert rate <= chain + 1e-15
        previous = rate
    assert previous == pytest.approx(chain, rel=0.002)


def test_report_floors_the_rate_at_zero():
    link = _fig_link(distance_km=120.0)
    report = finite_report(link, 10**9, mode="expected")
    assert report.rate == 0.0
    assert report.r_raw <= 0.0


def test_original_protocol_report_runs_end_to_end():
    device = DeviceParams.default()
    plan = OriginalPlan(nu=0.5, omega=0.1, pr_z=0.3, pr_nu=0.3, pr_omega=0.45)
    link = ChannelConfig(device=device, distance_km=10.0, plan=plan)
    report = finite_report(link, 10**10, mode="expected")
    assert report.rate > 0.0
    assert 0.0 < report.i_ae < 1.0
    assert report.pr_signal == pytest.approx(
        0.3 * 0.3 * 0.3 * 0.3, rel=1e-12
    )  # both chose Z and both chose the signal intensity
