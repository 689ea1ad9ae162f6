import pytest

from rfimdiqkd.channel import ChannelConfig
from rfimdiqkd.core import DeviceParams, IntensityPlan, OriginalPlan


@pytest.fixture
def device() -> DeviceParams:
    return DeviceParams.default()


@pytest.fixture
def noiseless_device() -> DeviceParams:
    # dark counts and misalignment off: closed-form single-photon identities hold
    return DeviceParams.default(p_d=0.0, e_d=0.0)


@pytest.fixture
def improved_plan() -> IntensityPlan:
    return IntensityPlan(mu=0.5, nu=0.2, omega=0.05, pr_mu=0.25, pr_nu=0.25, pr_omega=0.25)


@pytest.fixture
def original_plan() -> OriginalPlan:
    return OriginalPlan(nu=0.5, omega=0.1, pr_z=0.3, pr_nu=0.3, pr_omega=0.45)


@pytest.fixture
def short_link(device, improved_plan) -> ChannelConfig:
    return ChannelConfig(device=device, distance_km=10.0, plan=improved_plan)
