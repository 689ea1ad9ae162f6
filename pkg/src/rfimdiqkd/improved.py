"""Joint-basis decoy estimation for the four-intensity protocol.

Three ingredients tighten the per-basis baseline without new experimental
requirements:

1. Equatorial basis pairings share one single-photon yield, so their cells
   can be pooled before the decoy combination is applied (quadrupling the
   statistics behind each interval).
2. Sums of cell event totals obey their own concentration intervals, which
   bind tighter than the sum of per-cell boxes; the yield program carries
   rows for the one-sided pairs and the four-cell totals, the error programs
   for their cross sums.
3. The frame-quality statistic is minimized directly over the simplex of
   single-photon error rates subject to every certified error bound (single,
   pairwise, and all-four), instead of being assembled from four independent
   per-pairing caps.

The error-rate convention: all upper bounds are certified at the error-yield
level first and divided by the certified yield lower bound at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .core import (
    ATOMIC_DECOY_LABELS,
    JOINT_DECOY_LABEL,
    NO_BASIS_LABEL,
    SIGNAL_LABEL,
    StatCell,
    StatTable,
    label_sides,
    pair_label,
    poisson_pmf,
    pool,
)
from .bounds import chernoff_interval
from .lpkit import ConvexQuadraticProgram, LinearProgram, Row, solve_cqp, solve_lp
from .original import (
    YIELD_CELL_ORDER,
    _error_bound_from_cells,
    decoy_denominator,
    decoy_numerator_coefficients,
)

__all__ = [
    "ImprovedEstimates",
    "estimate_E_improved",
    "estimate_c_improved",
    "estimate_y11_joint",
    "improved_pipeline",
    "per_basis_estimates",
    "pooled_decoy_cell",
]


def _labels_for(label: str) -> tuple[str, ...]:
    """Atomic pairings covered by a (possibly pooled) equatorial label."""
    if label in ATOMIC_DECOY_LABELS:
        return (label,)
    if label == JOINT_DECOY_LABEL:
        return ATOMIC_DECOY_LABELS
    parts = tuple(label.split("+"))
    if len(parts) == 2 and all(p in ATOMIC_DECOY_LABELS for p in parts) and parts[0] != parts[1]:
        return parts
    raise ValueError(f"not an equatorial label: {label!r}")


def _side_projection(labels: tuple[str, ...], side: int) -> tuple[str, ...]:
    """One-sided labels a pooled equatorial label projects to on one side."""
    return tuple(sorted({label_sides(d)[side] for d in labels}))


def pooled_decoy_cell(observed: StatTable, role_a: str, role_b: str,
                      label: str = JOINT_DECOY_LABEL) -> StatCell:
    """Pooled statistics of an intensity pair under an equatorial label.

    Pools the matched pairings when both users sent light, the projections of
    the label onto the live side when one sent vacuum, and returns the shared
    unlabeled cell when both did.
    """
    members = _labels_for(label)
    if role_a == "o" and role_b == "o":
        return observed.cell("o", "o", NO_BASIS_LABEL)
    if role_b == "o":
        return pool(observed, _side_projection(members, 0), (role_a, "o"))
    if role_a == "o":
        return pool(observed, _side_projection(members, 1), ("o", role_b))
    return pool(observed, members, (role_a, role_b))


def estimate_y11_joint(observed: StatTable, eps: float | None,
                       label: str = JOINT_DECOY_LABEL) -> float:
    """Lower-bound the equatorial single-photon yield from pooled cells with
    summed-total rows; ``eps=None`` evaluates the closed form directly."""
    nu, omega = observed.intensity("nu"), observed.intensity("omega")
    cells = {pair: pooled_decoy_cell(observed, pair[0], pair[1], label)
             for pair in YIELD_CELL_ORDER}
    if eps is None:
        gains = {pair: c.q for pair, c in cells.items()}
        coeffs = decoy_numerator_coefficients(nu, omega)
        value = sum(coeffs[p] * gains[p] for p in coeffs) / decoy_denominator(nu, omega)
        return min(1.0, max(0.0, value))
    coeffs = decoy_numerator_coefficients(nu, omega)
    order = YIELD_CELL_ORDER
    index = {pair: i for i, pair in enumerate(order)}
    boxes = []
    for pair in order:
        cell = cells[pair]
        if cell.n == 0:
            boxes.append((0.0, 1.0))
            continue
        interval = chernoff_interval(cell.gain_events, eps)
        boxes.append((max(0.0, interval.lower / cell.n), min(1.0, interval.upper / cell.n)))
    rows: list[Row] = []
    groups = (
        (("nu", "o"), ("o", "nu")),
        (("omega", "o"), ("o", "omega")),
        (("nu", "nu"), ("nu", "o"), ("o", "nu"), ("o", "o")),
        (("omega", "omega"), ("omega", "o"), ("o", "omega"), ("o", "o")),
    )
    for group in groups:
        total = sum(cells[p].gain_events for p in group)
        scale = max(cells[p].n for p in group)
        if scale == 0:
            continue
        interval = chernoff_interval(total, eps)
        row = [0.0] * len(order)
        for p in group:
            row[index[p]] = cells[p].n / scale
        rows.append(Row(coeffs=tuple(row), lower=max(0.0, interval.lower) / scale,
                        upper=interval.upper / scale))
    program = LinearProgram(
        objective=tuple(coeffs[p] for p in order),
        var_lower=tuple(b[0] for b in boxes),
        var_upper=tuple(b[1] for b in boxes),
        rows=rows,
        maximize=False,
    )
    value = solve_lp(program).value / decoy_denominator(nu, omega)
    return min(1.0, max(0.0, value))


def estimate_y11_per_basis(observed: StatTable, d: str, eps: float | None) -> float:
    """Baseline comparator: the per-pairing bound (plain boxes, no summed
    rows) evaluated on four-intensity-protocol data restricted to ``d``."""
    nu, omega = observed.intensity("nu"), observed.intensity("omega")
    cells = {pair: pooled_decoy_cell(observed, pair[0], pair[1], d) for pair in YIELD_CELL_ORDER}
    coeffs = decoy_numerator_coefficients(nu, omega)
    if eps is None:
        value = sum(coeffs[p] * cells[p].q for p in coeffs) / decoy_denominator(nu, omega)
        return min(1.0, max(0.0, value))
    boxes = []
    for pair in YIELD_CELL_ORDER:
        cell = cells[pair]
        if cell.n == 0:
            boxes.append((0.0, 1.0))
            continue
        interval = chernoff_interval(cell.gain_events, eps)
        boxes.append((max(0.0, interval.lower / cell.n), min(1.0, interval.upper / cell.n)))
    program = LinearProgram(
        objective=tuple(coeffs[p] for p in YIELD_CELL_ORDER),
        var_lower=tuple(b[0] for b in boxes),
        var_upper=tuple(b[1] for b in boxes),
        maximize=False,
    )
    value = solve_lp(program).value / decoy_denominator(nu, omega)
    return min(1.0, max(0.0, value))


def per_basis_estimates(observed: StatTable, eps: float | None):
    """Run the full baseline chain on four-intensity-protocol data: every
    bound per equatorial pairing with plain boxes, no pooling across
    pairings, each error rate divided by its own pairing's yield bound.

    Returns the same container as the baseline pipeline, with the equatorial
    pairings as keys (there is no separately-estimated signal pairing here;
    the signal entries reuse the joint mu-intensity cells, boxes only).
    """
    from .original import OriginalEstimates

    y11_lower = {d: estimate_y11_per_basis(observed, d, eps) for d in ATOMIC_DECOY_LABELS}
    e_upper = {
        lam: {
            d: _error_bound_from_cells(
                same=pooled_decoy_cell(observed, lam, lam, d),
                a_side=pooled_decoy_cell(observed, lam, "o", d),
                b_side=pooled_decoy_cell(observed, "o", lam, d),
                vacuum=observed.cell("o", "o", NO_BASIS_LABEL),
                lam_value=observed.intensity(lam),
                eps=eps,
                pair_rows=False,
            )
            for d in ATOMIC_DECOY_LABELS
        }
        for lam in ("nu", "omega")
    }
    e11_upper: dict[str, float] = {}
    for d in ATOMIC_DECOY_LABELS:
        y = y11_lower[d]
        if y <= 0.0:
            e11_upper[d] = 1.0
        else:
            e11_upper[d] = min(1.0, min(e_upper["nu"][d], e_upper["omega"][d]) / y)
    c_lower = sum((1.0 - 2.0 * min(e11_upper[d], 0.5)) ** 2 for d in ATOMIC_DECOY_LABELS)
    return OriginalEstimates(y11_lower=y11_lower, e_upper=e_upper, e11_upper=e11_upper, c_lower=c_lower)


def estimate_E_improved(observed: StatTable, label: str, lam: str, eps: float | None) -> float:
    """Upper-bound the single-photon error yield of ``label`` at intensity
    role ``lam``, with cross-sum rows binding the four cells together.

    ``label`` may be an atomic equatorial pairing, a pooled pair such as
    ``"XX+YY"``, the all-four pool, or the signal label (which requires
    ``lam="mu"``).
    """
    if label == SIGNAL_LABEL:
        if lam != "mu":
            raise ValueError("the signal error bound runs at the signal intensity")
        return _error_bound_from_cells(
            same=observed.cell("mu", "mu", SIGNAL_LABEL),
            a_side=observed.cell("mu", "o", "Z"),
            b_side=observed.cell("o", "mu", "Z"),
            vacuum=observed.cell("o", "o", NO_BASIS_LABEL),
            lam_value=observed.intensity("mu"),
            eps=eps,
            pair_rows=True,
        )
    if lam not in ("nu", "omega"):
        raise ValueError(f"error bound needs a decoy intensity role, got {lam!r}")
    return _error_bound_from_cells(
        same=pooled_decoy_cell(observed, lam, lam, label),
        a_side=pooled_decoy_cell(observed, lam, "o", label),
        b_side=pooled_decoy_cell(observed, "o", lam, label),
        vacuum=observed.cell("o", "o", NO_BASIS_LABEL),
        lam_value=observed.intensity(lam),
        eps=eps,
        pair_rows=True,
    )


def estimate_c_improved(
    y11_lower: float,
    e_upper_single: dict[str, dict[str, float]],
    e_upper_pair: dict[str, float],
    e_upper_joint: float,
) -> float:
    """Certified lower bound on the frame-quality statistic.

    Minimizes sum_d (1 - 2 e_d)^2 over non-negative error rates subject to
    the per-pairing caps, the six pairwise-sum caps, and the all-four cap.
    ``e_upper_single`` is indexed [intensity role][pairing] at the yield
    level; pair and joint inputs are already reduced over intensity roles.
    A collapsed yield bound certifies nothing, so it returns 0.
    """
    if y11_lower <= 0.0:
        return 0.0
    caps = []
    for d in ATOMIC_DECOY_LABELS:
        cap = min(e_upper_single[lam][d] for lam in ("nu", "omega")) / y11_lower
        caps.append(min(cap, 0.5))
    rows: list[Row] = []
    for (i, d1), (j, d2) in combinations(enumerate(ATOMIC_DECOY_LABELS), 2):
        bound = 2.0 * e_upper_pair[pair_label(d1, d2)] / y11_lower
        coeffs = [0.0] * 4
        coeffs[i] = coeffs[j] = 1.0
        rows.append(Row(coeffs=tuple(coeffs), upper=bound))
    rows.append(Row(coeffs=(1.0, 1.0, 1.0, 1.0), upper=4.0 * e_upper_joint / y11_lower))
    program = ConvexQuadraticProgram(
        weights=(4.0,) * 4,
        centers=(0.5,) * 4,
        var_lower=(0.0,) * 4,
        var_upper=tuple(caps),
        rows=rows,
    )
    value = solve_cqp(program).value
    return min(4.0, max(0.0, value))


@dataclass(frozen=True)
class ImprovedEstimates:
    """Outputs of the joint pipeline on one observed table.

    Error-yield bounds are stored per intensity role before reduction:
    ``e_upper_single[lam][d]`` covers the four pairings plus the signal entry
    ``["mu"]["ZZ"]``; ``e_upper_pair[pair][lam]`` the six pooled pairs; and
    ``e_upper_joint[lam]`` the all-four pool. ``e11s_upper`` is the signal
    error rate fed to privacy amplification (1 when nothing is certified).
    """

    y11_lower: float
    e_upper_single: dict[str, dict[str, float]]
    e_upper_pair: dict[str, dict[str, float]]
    e_upper_joint: dict[str, float]
    e11s_upper: float
    c_lower: float


def improved_pipeline(observed: StatTable, eps: float | None) -> ImprovedEstimates:
    """Run the joint estimation chain on one observed table."""
    y11_lower = estimate_y11_joint(observed, eps)
    e_upper_single: dict[str, dict[str, float]] = {
        lam: {d: estimate_E_improved(observed, d, lam, eps) for d in ATOMIC_DECOY_LABELS}
        for lam in ("nu", "omega")
    }
    e_upper_single["mu"] = {SIGNAL_LABEL: estimate_E_improved(observed, SIGNAL_LABEL, "mu", eps)}
    e_upper_pair = {
        pair_label(d1, d2): {
            lam: estimate_E_improved(observed, pair_label(d1, d2), lam, eps)
            for lam in ("nu", "omega")
        }
        for d1, d2 in combinations(ATOMIC_DECOY_LABELS, 2)
    }
    e_upper_joint = {lam: estimate_E_improved(observed, JOINT_DECOY_LABEL, lam, eps)
                     for lam in ("nu", "omega")}
    if y11_lower <= 0.0:
        e11s_upper = 1.0
    else:
        e11s_upper = min(1.0, e_upper_single["mu"][SIGNAL_LABEL] / y11_lower)
    c_lower = estimate_c_improved(
        y11_lower,
        e_upper_single,
        {p: min(values.values()) for p, values in e_upper_pair.items()},
        min(e_upper_joint.values()),
    )
    return ImprovedEstimates(
        y11_lower=y11_lower,
        e_upper_single=e_upper_single,
        e_upper_pair=e_upper_pair,
        e_upper_joint=e_upper_joint,
        e11s_upper=e11s_upper,
        c_lower=c_lower,
    )
