"""Secret-key-rate evaluation from certified estimates.

The privacy-amplification term does not assume any shared reference frame:
leakage to an eavesdropper is bounded through the frame-quality statistic
``c`` (sum of squared correlators of the four equatorial pairings) together
with the signal error rate ``e``. Writing u and v for the extremal
correlator split,

    u = min(sqrt(c/2) / (1 - e), 1)
    v = sqrt(c/2 - (1 - e)^2 u^2) / e
    leakage = (1 - e) H2((1 + u)/2) + e H2((1 + v)/2)

a perfectly correlated frame (c = 2, e = 0) leaks nothing and an
uncharacterized one (c = 0) leaks everything. The key-rate normalization is
per transmission window: selection probability of the signal cell times the
single-photon contribution minus error correction on the whole signal sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    DeviceParams,
    IntensityPlan,
    OriginalPlan,
    SIGNAL_LABEL,
    StatTable,
    binary_entropy,
    cell_selection_probabilities,
    poisson_pmf,
)
from .channel import ChannelConfig, SinglePhotonTruth, expected_statistics, single_photon_truth
from .improved import ImprovedEstimates, improved_pipeline
from .original import OriginalEstimates, original_pipeline

__all__ = [
    "KeyRateReport",
    "asymptotic_report",
    "compute_uv",
    "finite_report",
    "ideal_asymptotic_report",
    "information_leakage",
    "key_rate_improved",
    "key_rate_original",
    "single_photon_rate",
]


def compute_uv(c: float, e: float) -> tuple[float, float]:
    """Extremal correlator split entering the leakage bound.

    Certified inputs can land slightly outside the physical region (c just
    above the sphere's reach for the given e); the split is then clamped to
    the boundary, which only increases the resulting leakage. Negative c is
    treated as 0.
    """
    c = max(0.0, c)
    e = min(1.0, max(0.0, e))
    half = c / 2.0
    if e >= 1.0:
        return 1.0, min(1.0, math.sqrt(half))
    u = min(math.sqrt(half) / (1.0 - e), 1.0)
    radicand = half - (1.0 - e) ** 2 * u * u
    if radicand < -1e-9:
        raise ValueError(f"inconsistent correlator split: radicand={radicand}")
    radicand = max(0.0, radicand)
    if e == 0.0:
        return u, 0.0
    return u, min(1.0, math.sqrt(radicand) / e)


def information_leakage(c: float, e: float) -> float:
    """Upper bound on the eavesdropper's information about the signal bits."""
    u, v = compute_uv(c, e)
    return (1.0 - e) * binary_entropy((1.0 + u) / 2.0) + e * binary_entropy((1.0 + v) / 2.0)


@dataclass(frozen=True)
class KeyRateReport:
    """Key rate per transmission window with its certified ingredients.

    ``r_raw`` keeps the sign; ``rate`` is the reported value, floored at 0.
    """

    rate: float
    r_raw: float
    i_ae: float
    u: float
    v: float
    y11_lower: float
    e11s_upper: float
    c_lower: float
    q_signal: float
    t_signal: float
    pr_signal: float


def _gllp_rate(pr_signal: float, p1_sq: float, y11: float, e11s: float, c: float,
               q: float, t: float, device: DeviceParams) -> KeyRateReport:
    i_ae = information_leakage(c, e11s)
    u, v = compute_uv(max(0.0, c), min(1.0, max(0.0, e11s)))
    if q > 0.0:
        correction = q * device.f_e * binary_entropy(min(1.0, max(0.0, t / q)))
    else:
        correction = 0.0
    r = pr_signal * p1_sq * (y11 * (1.0 - i_ae) - correction)
    return KeyRateReport(
        rate=max(0.0, r),
        r_raw=r,
        i_ae=i_ae,
        u=u,
        v=v,
        y11_lower=y11,
        e11s_upper=e11s,
        c_lower=c,
        q_signal=q,
        t_signal=t,
        pr_signal=pr_signal,
    )


def key_rate_improved(
    estimates: ImprovedEstimates,
    observed: StatTable,
    plan: IntensityPlan,
    device: DeviceParams,
) -> KeyRateReport:
    """Key rate of the four-intensity protocol from its certified estimates."""
    signal = observed.cell("mu", "mu", SIGNAL_LABEL)
    pr_signal = cell_selection_probabilities(plan)[("mu", "mu", SIGNAL_LABEL)]
    p1 = poisson_pmf(plan.mu, 1)
    return _gllp_rate(
        pr_signal=pr_signal,
        p1_sq=p1 * p1,
        y11=estimates.y11_lower,
        e11s=estimates.e11s_upper,
        c=estimates.c_lower,
        q=signal.q,
        t=signal.t,
        device=device,
    )


def key_rate_original(
    estimates: OriginalEstimates,
    observed: StatTable,
    plan: OriginalPlan,
    device: DeviceParams,
) -> KeyRateReport:
    """Key rate of the three-intensity protocol; the higher decoy intensity
    doubles as the signal."""
    signal = observed.cell("nu", "nu", SIGNAL_LABEL)
    pr_signal = cell_selection_probabilities(plan)[("nu", "nu", SIGNAL_LABEL)]
    p1 = poisson_pmf(plan.nu, 1)
    return _gllp_rate(
        pr_signal=pr_signal,
        p1_sq=p1 * p1,
        y11=estimates.y11_lower[SIGNAL_LABEL],
        e11s=estimates.e11_upper[SIGNAL_LABEL],
        c=estimates.c_lower,
        q=signal.q,
        t=signal.t,
        device=device,
    )


def single_photon_rate(truth: SinglePhotonTruth, device: DeviceParams) -> float:
    """Key rate of an ideal single-photon source with perfect estimation,
    per post-selected signal pair. Depends on the users' frames only through
    dark counts and misalignment."""
    e_signal = truth.e11[SIGNAL_LABEL]
    leak = information_leakage(truth.c_value(), e_signal)
    return truth.y11 * (1.0 - leak) - truth.y11 * device.f_e * binary_entropy(e_signal)


def ideal_asymptotic_report(cfg: ChannelConfig) -> KeyRateReport:
    """Key rate in the infinite-data, perfect-estimation limit.

    Single-photon quantities are taken from the exact oracle instead of any
    decoy bound (the limit of unboundedly many decoy settings); error
    correction still pays for the real signal statistics of the configured
    source. This is the reference asymptote both protocols share, and it
    inherits the oracle's exact frame independence.
    """
    truth = single_photon_truth(cfg)
    expected = expected_statistics(cfg)
    plan = cfg.plan
    if isinstance(plan, IntensityPlan):
        signal_key = ("mu", "mu", SIGNAL_LABEL)
        p1 = poisson_pmf(plan.mu, 1)
    else:
        signal_key = ("nu", "nu", SIGNAL_LABEL)
        p1 = poisson_pmf(plan.nu, 1)
    signal = expected.cells[signal_key]
    pr_signal = cell_selection_probabilities(plan)[signal_key]
    return _gllp_rate(
        pr_signal=pr_signal,
        p1_sq=p1 * p1,
        y11=truth.y11,
        e11s=truth.e11[SIGNAL_LABEL],
        c=truth.c_value(),
        q=signal.q,
        t=signal.t,
        device=cfg.device,
    )


def asymptotic_report(cfg: ChannelConfig) -> KeyRateReport:
    """Zero-width estimation chain on model expectations.

    This is the large-data limit of the finite pipeline: statistical
    intervals collapse but the decoy combinations keep their multi-photon
    slack (see :func:`ideal_asymptotic_report` for the perfect-knowledge
    reference)."""
    expected = expected_statistics(cfg)
    if isinstance(cfg.plan, IntensityPlan):
        estimates = improved_pipeline(expected, None)
        return key_rate_improved(estimates, expected, cfg.plan, cfg.device)
    estimates = original_pipeline(expected, None)
    return key_rate_original(estimates, expected, cfg.plan, cfg.device)


def finite_report(
    cfg: ChannelConfig,
    n_tot: int,
    mode: str = "expected",
    seed: int | None = None,
) -> KeyRateReport:
    """Full chain for a finite session: allocate, observe, estimate, rate."""
    from .sampling import allocate, observe

    expected = expected_statistics(cfg)
    observed = observe(expected, allocate(cfg.plan, n_tot), mode=mode, seed=seed)
    if isinstance(cfg.plan, IntensityPlan):
        estimates = improved_pipeline(observed, cfg.device.epsilon)
        return key_rate_improved(estimates, observed, cfg.plan, cfg.device)
    estimates = original_pipeline(observed, cfg.device.epsilon)
    return key_rate_original(estimates, observed, cfg.plan, cfg.device)
