"""Optical model of the symmetric two-user link with an untrusted relay.

Both users send phase-randomized weak coherent pulses (or single photons, in
the oracle below) through lossy fiber to a relay that interferes them on a
50/50 beam splitter and watches four threshold detectors (two output ports,
each split into H and V). The relay announces one of two Bell-type outcomes:

* "plus"  when exactly the two detectors {1H, 1V} or {2H, 2V} click,
* "minus" when exactly {1H, 2V} or {1V, 2H} click.

Every other click pattern is discarded. Z-coded bits are the H/V modes
themselves; X and Y live on the equator of the polarization sphere and pick up
each user's local reference-frame angle, so only the frame difference enters
any observable quantity.

Gains and error yields are computed by averaging the four-detector click
probabilities over the two independent uniform pulse phases (tensorized
Gauss-Legendre quadrature) and over the users' bit choices. Misalignment is
applied afterwards as an independent bit-flip of strength ``e_d`` on
successful events. Events where a vacuum user is involved carry a uniformly
random key bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ATOMIC_DECOY_LABELS,
    ALL_MATCHED_LABELS,
    NO_BASIS_LABEL,
    SIGNAL_LABEL,
    DeviceParams,
    IntensityPlan,
    OriginalPlan,
    ParameterValidationError,
    StatCell,
    StatTable,
    cell_selection_probabilities,
    label_sides,
)

__all__ = [
    "ChannelConfig",
    "SinglePhotonTruth",
    "arm_transmittance",
    "expected_statistics",
    "mc_oracle",
    "single_photon_truth",
]

# Trial-count scale assigned to expectation tables so that pooling weights
# reflect the plan's cell probabilities.
_EXPECTED_SCALE = 10**18

_QUAD_POINTS = 64

_gl_x, _gl_w = np.polynomial.legendre.leggauss(_QUAD_POINTS)
# Map [-1, 1] -> [0, 2*pi); weights normalized so they sum to 1 per axis.
_PHI = math.pi * (_gl_x + 1.0)
_W = _gl_w / 2.0

_PHI_A = _PHI[:, None]
_PHI_B = _PHI[None, :]
_W2 = np.outer(_W, _W)


@dataclass(frozen=True)
class ChannelConfig:
    """A complete simulated experiment: devices, fiber length, source plan."""

    device: DeviceParams
    distance_km: float
    plan: IntensityPlan | OriginalPlan

    def __post_init__(self) -> None:
        if self.distance_km < 0.0:
            raise ParameterValidationError(f"distance must be >= 0, got {self.distance_km}")


@dataclass(frozen=True)
class SinglePhotonTruth:
    """Exact relay response to a single photon from each user.

    ``y11`` is basis-pair independent (the four-detector layout treats every
    equatorial direction alike); the per-pair values are retained for
    diagnostics. ``e11`` maps each matched basis label to its single-photon
    error rate, without any clamping.
    """

    y11: float
    e11: dict[str, float]
    y11_by_label: dict[str, float]

    def c_value(self) -> float:
        """Frame-independent quality statistic of the four decoy pairings."""
        return sum((1.0 - 2.0 * self.e11[d]) ** 2 for d in ATOMIC_DECOY_LABELS)


def arm_transmittance(device: DeviceParams, distance_km: float) -> float:
    """One user's end-to-end transmittance: half-link fiber plus detector."""
    return 10.0 ** (-device.alpha_db_per_km * (distance_km / 2.0) / 10.0) * device.eta_d


# ---------------------------------------------------------------------------
# Coherent-pulse click statistics


def _click(n_mean, p_d):
    return 1.0 - (1.0 - p_d) * np.exp(-n_mean)


def _patterns(n1h, n1v, n2h, n2v, p_d):
    """Probabilities of the two announced patterns given mode means."""
    p1h, p1v, p2h, p2v = (_click(n, p_d) for n in (n1h, n1v, n2h, n2v))
    m1h, m1v, m2h, m2v = 1.0 - p1h, 1.0 - p1v, 1.0 - p2h, 1.0 - p2v
    plus = p1h * p1v * m2h * m2v + m1h * m1v * p2h * p2v
    minus = p1h * m1v * m2h * p2v + m1h * p1v * p2h * m2v
    return plus, minus


def _equatorial_patterns(arr_a: float, arr_b: float, deltas: np.ndarray, p_d: float):
    """Phase-averaged pattern probabilities for equatorial pulses whose mode
    angle difference takes each value in ``deltas``.

    Returns two arrays aligned with ``deltas``.
    """
    s = (arr_a + arr_b) / 4.0
    g = math.sqrt(arr_a * arr_b) / 2.0
    phi = (_PHI_A - _PHI_B)[:, :, None]
    d = np.asarray(deltas, dtype=float)[None, None, :]
    c_h = np.cos(phi)
    c_v = np.cos(phi + d)
    n1h = s + g * c_h
    n1v = s + g * c_v
    n2h = s - g * c_h
    n2v = s - g * c_v
    plus, minus = _patterns(n1h, n1v, n2h, n2v, p_d)
    w = _W2[:, :, None]
    return np.sum(w * plus, axis=(0, 1)), np.sum(w * minus, axis=(0, 1))


def _signal_equal_patterns(arr_a: float, arr_b: float, p_d: float):
    """Both users code the same Z bit: single-mode interference."""
    phi = _PHI_A - _PHI_B
    mid = (arr_a + arr_b) / 2.0
    cross = math.sqrt(arr_a * arr_b) * np.cos(phi)
    n1 = mid + cross
    n2 = mid - cross
    zero = np.zeros_like(n1)
    plus, minus = _patterns(n1, zero, n2, zero, p_d)
    return float(np.sum(_W2 * plus)), float(np.sum(_W2 * minus))


def _signal_differ_patterns(arr_a: float, arr_b: float, p_d: float):
    """Opposite Z bits: orthogonal modes, no interference."""
    plus, minus = _patterns(arr_a / 2.0, arr_b / 2.0, arr_a / 2.0, arr_b / 2.0, p_d)
    return float(plus), float(minus)


def _one_sided_patterns(arr: float, equatorial: bool, p_d: float):
    """Exactly one user sent light."""
    if equatorial:
        n = (arr / 4.0,) * 4
    else:
        n = (arr / 2.0, 0.0, arr / 2.0, 0.0)
    plus, minus = _patterns(*n, p_d)
    return float(plus), float(minus)


def _vacuum_patterns(p_d: float):
    dark = p_d * p_d * (1.0 - p_d) ** 2
    return 2.0 * dark, 2.0 * dark


def _flip(q: float, t_raw: float, e_d: float) -> float:
    return t_raw * (1.0 - e_d) + (q - t_raw) * e_d


def _decoy_delta_offsets(frame_offset: float) -> dict[str, float]:
    b = frame_offset
    return {"XX": -b, "XY": -b - math.pi / 2.0, "YX": math.pi / 2.0 - b, "YY": -b}


def _equatorial_cells(arr_a: float, arr_b: float, device: DeviceParams) -> dict[str, StatCell]:
    """Gain and error yield of all four equatorial basis pairings at one
    intensity pair, misalignment included. Trial counts are left at zero."""
    offsets = _decoy_delta_offsets(device.frame_offset)
    deltas = []
    for d in ATOMIC_DECOY_LABELS:
        deltas.append(offsets[d])            # users' bits agree
        deltas.append(offsets[d] + math.pi)  # users' bits differ
    plus, minus = _equatorial_patterns(arr_a, arr_b, np.asarray(deltas), device.p_d)
    cells: dict[str, StatCell] = {}
    for i, d in enumerate(ATOMIC_DECOY_LABELS):
        qp0, qm0 = plus[2 * i], minus[2 * i]
        qp1, qm1 = plus[2 * i + 1], minus[2 * i + 1]
        q = float(qp0 + qm0 + qp1 + qm1) / 2.0
        # "minus" heralds anti-correlation (error when bits agree); "plus"
        # heralds correlation on the equator (error when bits differ).
        t_raw = float(qm0 + qp1) / 2.0
        cells[d] = StatCell(n=0, q=q, t=_flip(q, t_raw, device.e_d))
    return cells


def _signal_cell(arr_a: float, arr_b: float, device: DeviceParams) -> StatCell:
    qp0, qm0 = _signal_equal_patterns(arr_a, arr_b, device.p_d)
    qp1, qm1 = _signal_differ_patterns(arr_a, arr_b, device.p_d)
    q = (qp0 + qm0 + qp1 + qm1) / 2.0
    # Both announcements herald anti-correlated Z bits.
    t_raw = (qp0 + qm0) / 2.0
    return StatCell(n=0, q=q, t=_flip(q, t_raw, device.e_d))


def _one_sided_cell(arr: float, equatorial: bool, device: DeviceParams) -> StatCell:
    qp, qm = _one_sided_patterns(arr, equatorial, device.p_d)
    q = qp + qm
    return StatCell(n=0, q=q, t=q / 2.0)


def _vacuum_cell(device: DeviceParams) -> StatCell:
    qp, qm = _vacuum_patterns(device.p_d)
    q = qp + qm
    return StatCell(n=0, q=q, t=q / 2.0)


def _with_count(cell: StatCell, probability: float) -> StatCell:
    return StatCell(n=int(round(probability * _EXPECTED_SCALE)), q=cell.q, t=cell.t)


def expected_statistics(cfg: ChannelConfig) -> StatTable:
    """Model expectation of every retained cell of the configured protocol.

    The returned table's trial counts are proportional to each cell's
    selection probability (an arbitrary large common scale), so pooling
    behaves as it would on data from the same plan.
    """
    device = cfg.device
    eta = arm_transmittance(device, cfg.distance_km)
    plan = cfg.plan
    table = StatTable(kind="expected", intensities=plan.intensities())

    if isinstance(plan, IntensityPlan):
        probabilities = cell_selection_probabilities(plan)
        arr_mu = eta * plan.mu
        table.set_cell("mu", "mu", SIGNAL_LABEL,
                       _with_count(_signal_cell(arr_mu, arr_mu, device), probabilities[("mu", "mu", SIGNAL_LABEL)]))
        z_side = _one_sided_cell(arr_mu, equatorial=False, device=device)
        table.set_cell("mu", "o", "Z", _with_count(z_side, probabilities[("mu", "o", "Z")]))
        table.set_cell("o", "mu", "Z", _with_count(z_side, probabilities[("o", "mu", "Z")]))
        for la in ("nu", "omega"):
            arr_a = eta * plan.intensity(la)
            eq_side = _one_sided_cell(arr_a, equatorial=True, device=device)
            for side_basis in ("X", "Y"):
                table.set_cell(la, "o", side_basis, _with_count(eq_side, probabilities[(la, "o", side_basis)]))
                table.set_cell("o", la, side_basis, _with_count(eq_side, probabilities[("o", la, side_basis)]))
            for lb in ("nu", "omega"):
                arr_b = eta * plan.intensity(lb)
                for d, cell in _equatorial_cells(arr_a, arr_b, device).items():
                    table.set_cell(la, lb, d, _with_count(cell, probabilities[(la, lb, d)]))
        table.set_cell("o", "o", NO_BASIS_LABEL,
                       _with_count(_vacuum_cell(device), probabilities[("o", "o", NO_BASIS_LABEL)]))
        return table

    probabilities = cell_selection_probabilities(plan)
    for la in ("nu", "omega", "o"):
        arr_a = eta * plan.intensity(la)
        for lb in ("nu", "omega", "o"):
            arr_b = eta * plan.intensity(lb)
            if la != "o" and lb != "o":
                decoys = _equatorial_cells(arr_a, arr_b, device)
                zz = _signal_cell(arr_a, arr_b, device)
            elif la == "o" and lb == "o":
                shared = _vacuum_cell(device)
                decoys = {d: shared for d in ATOMIC_DECOY_LABELS}
                zz = shared
            else:
                arr = arr_a if lb == "o" else arr_b
                eq_side = _one_sided_cell(arr, equatorial=True, device=device)
                z_side = _one_sided_cell(arr, equatorial=False, device=device)
                # The live user's basis decides which one-sided response
                # applies; the vacuum user's nominal basis only names the cell.
                live = 0 if lb == "o" else 1
                decoys = {d: (eq_side if label_sides(d)[live] in ("X", "Y") else z_side)
                          for d in ATOMIC_DECOY_LABELS}
                zz = z_side
            for d in ATOMIC_DECOY_LABELS:
                table.set_cell(la, lb, d, _with_count(decoys[d], probabilities[(la, lb, d)]))
            table.set_cell(la, lb, SIGNAL_LABEL, _with_count(zz, probabilities[(la, lb, SIGNAL_LABEL)]))
    return table


# ---------------------------------------------------------------------------
# Single-photon oracle

_MODES = ("1H", "1V", "2H", "2V")
_PLUS_PATTERNS = (frozenset({"1H", "1V"}), frozenset({"2H", "2V"}))
_MINUS_PATTERNS = (frozenset({"1H", "2V"}), frozenset({"1V", "2H"}))


def _jones(basis: str, bit: int, frame_angle: float) -> np.ndarray:
    if basis == "Z":
        return np.array([1.0, 0.0], dtype=complex) if bit == 0 else np.array([0.0, 1.0], dtype=complex)
    phase = np.exp(1j * frame_angle)
    if basis == "X":
        return np.array([1.0, (-1.0) ** bit * phase], dtype=complex) / math.sqrt(2.0)
    if basis == "Y":
        return np.array([1.0, (-1.0) ** bit * 1j * phase], dtype=complex) / math.sqrt(2.0)
    raise ParameterValidationError(f"unknown basis {basis!r}")


def _pattern_probs_single_pair(alpha: np.ndarray, beta: np.ndarray,
                               eta_a: float, eta_b: float, p_d: float) -> tuple[float, float]:
    """Exact announced-pattern probabilities for one photon per user with
    polarization vectors ``alpha`` and ``beta`` (components H, V)."""
    dark2 = p_d * p_d * (1.0 - p_d) ** 2

    plus = 0.0
    minus = 0.0

    # Both photons lost: announcements come from dark counts alone.
    lost_both = (1.0 - eta_a) * (1.0 - eta_b)
    plus += lost_both * 2.0 * dark2
    minus += lost_both * 2.0 * dark2

    # One photon survives: it clicks for sure, the partner slot is a dark.
    single_dark = p_d * (1.0 - p_d) ** 2
    for weight, vec in ((eta_a * (1.0 - eta_b), alpha), (eta_b * (1.0 - eta_a), beta)):
        if weight == 0.0:
            continue
        landing = {
            "1H": abs(vec[0]) ** 2 / 2.0,
            "1V": abs(vec[1]) ** 2 / 2.0,
            "2H": abs(vec[0]) ** 2 / 2.0,
            "2V": abs(vec[1]) ** 2 / 2.0,
        }
        for patterns, acc in ((_PLUS_PATTERNS, "plus"), (_MINUS_PATTERNS, "minus")):
            p = sum(landing[m] for pat in patterns for m in pat) * single_dark
            if acc == "plus":
                plus += weight * p
            else:
                minus += weight * p

    # Both photons survive: expand the two-photon amplitude over mode pairs.
    both = eta_a * eta_b
    if both > 0.0:
        # a_P -> (c1P + c2P)/sqrt(2); b_P -> (c1P - c2P)/sqrt(2)
        a_modes = {
            "1H": alpha[0] / math.sqrt(2.0), "2H": alpha[0] / math.sqrt(2.0),
            "1V": alpha[1] / math.sqrt(2.0), "2V": alpha[1] / math.sqrt(2.0),
        }
        b_modes = {
            "1H": beta[0] / math.sqrt(2.0), "2H": -beta[0] / math.sqrt(2.0),
            "1V": beta[1] / math.sqrt(2.0), "2V": -beta[1] / math.sqrt(2.0),
        }
        amp: dict[frozenset, complex] = {}
        for ma in _MODES:
            for mb in _MODES:
                key = frozenset({ma, mb})
                amp[key] = amp.get(key, 0.0) + a_modes[ma] * b_modes[mb]
        outcome_probs: dict[frozenset, float] = {}
        for key, t in amp.items():
            # A doubly-occupied mode carries the bosonic sqrt(2): outcome
            # |2_m> has probability 2|A|^2, a singly-occupied pair |A|^2.
            outcome_probs[key] = (2.0 if len(key) == 1 else 1.0) * abs(t) ** 2
        for patterns, is_plus in ((_PLUS_PATTERNS, True), (_MINUS_PATTERNS, False)):
            acc = 0.0
            for pat in patterns:
                for occupied, p in outcome_probs.items():
                    if occupied <= pat:
                        extra_darks = len(pat) - len(occupied)
                        acc += p * (p_d ** extra_darks) * (1.0 - p_d) ** 2
            if is_plus:
                plus += both * acc
            else:
                minus += both * acc
    return plus, minus


def single_photon_truth(cfg: ChannelConfig) -> SinglePhotonTruth:
    """Relay response when each user injects exactly one photon.

    Serves as the independent reference the decoy estimators are judged
    against: any sound lower bound on the single-photon yield must sit at or
    below ``y11``, and any sound error upper bound at or above ``e11``.
    """
    device = cfg.device
    eta = arm_transmittance(device, cfg.distance_km)
    y_by: dict[str, float] = {}
    e_by: dict[str, float] = {}
    for d in ALL_MATCHED_LABELS:
        da, db = label_sides(d)
        success = 0.0
        raw_errors = 0.0
        for bit_a in (0, 1):
            for bit_b in (0, 1):
                alpha = _jones(da, bit_a, device.beta_a)
                beta = _jones(db, bit_b, device.beta_b)
                plus, minus = _pattern_probs_single_pair(alpha, beta, eta, eta, device.p_d)
                success += (plus + minus) / 4.0
                agree = bit_a == bit_b
                err_minus = minus if agree else 0.0
                if da == "Z":
                    err_plus = plus if agree else 0.0
                else:
                    err_plus = 0.0 if agree else plus
                raw_errors += (err_plus + err_minus) / 4.0
        errors = _flip(success, raw_errors, device.e_d)
        y_by[d] = success
        e_by[d] = errors / success if success > 0.0 else 0.0
    y_values = list(y_by.values())
    y11 = float(np.mean(y_values))
    return SinglePhotonTruth(y11=y11, e11=e_by, y11_by_label=y_by)


# ---------------------------------------------------------------------------
# Monte Carlo oracle


def _mc_counts_from_means(rng: np.random.Generator, n_means: list[np.ndarray], p_d: float):
    """Sample the four threshold detectors and classify the click pattern.

    Returns boolean arrays (is_plus, is_minus)."""
    clicks = []
    for n in n_means:
        p = 1.0 - (1.0 - p_d) * np.exp(-n)
        clicks.append(rng.random(p.shape) < p)
    c1h, c1v, c2h, c2v = clicks
    plus = (c1h & c1v & ~c2h & ~c2v) | (~c1h & ~c1v & c2h & c2v)
    minus = (c1h & ~c1v & ~c2h & c2v) | (~c1h & c1v & c2h & ~c2v)
    return plus, minus


def _mc_equatorial(rng, trials, arr_a, arr_b, delta0, device):
    """Simulate one both-equatorial cell; returns (successes, errors)."""
    phi = rng.uniform(0.0, 2.0 * math.pi, trials) - rng.uniform(0.0, 2.0 * math.pi, trials)
    bits_a = rng.integers(0, 2, trials)
    bits_b = rng.integers(0, 2, trials)
    delta = delta0 + (bits_a - bits_b) * math.pi
    s = (arr_a + arr_b) / 4.0
    g = math.sqrt(arr_a * arr_b) / 2.0
    n1h = s + g * np.cos(phi)
    n1v = s + g * np.cos(phi + delta)
    plus, minus = _mc_counts_from_means(rng, [n1h, n1v, 2.0 * s - n1h, 2.0 * s - n1v], device.p_d)
    agree = bits_a == bits_b
    err = (minus & agree) | (plus & ~agree)
    return _mc_finish(rng, plus | minus, err, device.e_d)


def _mc_signal(rng, trials, arr_a, arr_b, device):
    phi = rng.uniform(0.0, 2.0 * math.pi, trials) - rng.uniform(0.0, 2.0 * math.pi, trials)
    bits_a = rng.integers(0, 2, trials)
    bits_b = rng.integers(0, 2, trials)
    agree = bits_a == bits_b
    mid = (arr_a + arr_b) / 2.0
    cross = math.sqrt(arr_a * arr_b) * np.cos(phi)
    # Matching bits interfere in one polarization mode; opposite bits occupy
    # orthogonal modes and split independently.
    n1h = np.where(agree, mid + cross, arr_a / 2.0)
    n2h = np.where(agree, mid - cross, arr_a / 2.0)
    n1v = np.where(agree, 0.0, arr_b / 2.0)
    n2v = np.where(agree, 0.0, arr_b / 2.0)
    plus, minus = _mc_counts_from_means(rng, [n1h, n1v, n2h, n2v], device.p_d)
    err = (plus | minus) & agree
    return _mc_finish(rng, plus | minus, err, device.e_d)


def _mc_one_sided(rng, trials, arr, equatorial, device):
    if equatorial:
        means = [np.full(trials, arr / 4.0)] * 4
    else:
        zero = np.zeros(trials)
        means = [np.full(trials, arr / 2.0), zero, np.full(trials, arr / 2.0), zero]
    plus, minus = _mc_counts_from_means(rng, means, device.p_d)
    success = plus | minus
    err = success & (rng.random(trials) < 0.5)
    return _mc_finish(rng, success, err, device.e_d)


def _mc_vacuum(rng, trials, device):
    zero = np.zeros(trials)
    plus, minus = _mc_counts_from_means(rng, [zero, zero, zero, zero], device.p_d)
    success = plus | minus
    err = success & (rng.random(trials) < 0.5)
    return _mc_finish(rng, success, err, device.e_d)


def _mc_finish(rng, success, err, e_d):
    flip = rng.random(success.shape) < e_d
    err = success & (err ^ flip)
    return int(np.count_nonzero(success)), int(np.count_nonzero(err))


def mc_oracle(cfg: ChannelConfig, trials: int, seed: int) -> StatTable:
    """Direct event-by-event simulation with ``trials`` pulses per cell.

    Uses a single seeded generator consumed in sorted cell order, so a given
    (cfg, trials, seed) always reproduces the same table.
    """
    if trials <= 0:
        raise ParameterValidationError(f"trials must be positive, got {trials}")
    device = cfg.device
    eta = arm_transmittance(device, cfg.distance_km)
    expected = expected_statistics(cfg)
    rng = np.random.default_rng(seed)
    offsets = _decoy_delta_offsets(device.frame_offset)
    table = StatTable(kind="observed", intensities=cfg.plan.intensities())
    for key in sorted(expected.cells):
        role_a, role_b, label = key
        arr_a = eta * cfg.plan.intensity(role_a)
        arr_b = eta * cfg.plan.intensity(role_b)
        if label in ATOMIC_DECOY_LABELS and role_a != "o" and role_b != "o":
            successes, errors = _mc_equatorial(rng, trials, arr_a, arr_b, offsets[label], device)
        elif label == SIGNAL_LABEL and role_a != "o" and role_b != "o":
            successes, errors = _mc_signal(rng, trials, arr_a, arr_b, device)
        elif role_a == "o" and role_b == "o":
            successes, errors = _mc_vacuum(rng, trials, device)
        else:
            arr = arr_a if role_b == "o" else arr_b
            live = 0 if role_b == "o" else 1
            live_basis = label if label in ("X", "Y", "Z") else label_sides(label)[live]
            successes, errors = _mc_one_sided(rng, trials, arr, live_basis != "Z", device)
        table.set_cell(role_a, role_b, label,
                       StatCell(n=trials, q=successes / trials, t=errors / trials))
    return table
