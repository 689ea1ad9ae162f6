"""Per-basis decoy-state estimation, the baseline both protocols share.

With two decoy intensities nu > omega plus vacuum on each side, the
single-photon yield of a basis pairing obeys a closed-form lower bound built
from seven of the nine intensity-pair gains, and the single-photon error
yield an upper bound built from four. Here each basis pairing is estimated
from its own cells only, with plain per-cell confidence boxes; the joint
estimator layered on top of this (see the sibling module) pools pairings and
adds cross-cell constraints.

All bounds accept ``eps=None`` to run at zero interval width, which reduces
them to the closed forms evaluated directly on the observed frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    ALL_MATCHED_LABELS,
    ATOMIC_DECOY_LABELS,
    StatCell,
    StatTable,
    poisson_pmf,
)
from .bounds import chernoff_interval
from .lpkit import LinearProgram, Row, solve_lp

__all__ = [
    "OriginalEstimates",
    "decoy_denominator",
    "decoy_numerator_coefficients",
    "error_numerator_coefficients",
    "estimate_E_original",
    "estimate_y11_original",
    "original_pipeline",
    "y11_asymptotic",
]

# Intensity-pair positions entering the yield bound, in a fixed order shared
# by every consumer (the LP variable order).
YIELD_CELL_ORDER: tuple[tuple[str, str], ...] = (
    ("nu", "nu"),
    ("omega", "omega"),
    ("nu", "o"),
    ("o", "nu"),
    ("omega", "o"),
    ("o", "omega"),
    ("o", "o"),
)


def decoy_denominator(nu: float, omega: float) -> float:
    """Coefficient multiplying the single-photon yield in the decoy
    combination; positive whenever nu > omega > 0."""
    p1n, p1w = poisson_pmf(nu, 1), poisson_pmf(omega, 1)
    p2n, p2w = poisson_pmf(nu, 2), poisson_pmf(omega, 2)
    return p1n * p1w * (p1w * p2n - p1n * p2w)


def decoy_numerator_coefficients(nu: float, omega: float) -> dict[tuple[str, str], float]:
    """Signed weight of each intensity-pair gain in the yield combination.

    The combination equals sum(coeff * Q_pair); dividing by
    :func:`decoy_denominator` under-estimates the single-photon yield because
    every multi-photon term it retains carries a non-positive weight.
    """
    p0n, p1n, p2n = (poisson_pmf(nu, k) for k in range(3))
    p0w, p1w, p2w = (poisson_pmf(omega, k) for k in range(3))
    high = p1n * p2n   # weight of the cleaned low-intensity gain
    low = p1w * p2w    # weight of the cleaned high-intensity gain
    return {
        ("nu", "nu"): -low,
        ("omega", "omega"): high,
        ("nu", "o"): low * p0n,
        ("o", "nu"): low * p0n,
        ("omega", "o"): -high * p0w,
        ("o", "omega"): -high * p0w,
        ("o", "o"): high * p0w * p0w - low * p0n * p0n,
    }


def error_numerator_coefficients(lam: float) -> dict[tuple[str, str], float]:
    """Signed weight of each error yield in the single-photon error-yield
    upper bound at decoy intensity ``lam``; keys are placeholders
    (same, one-sided A, one-sided B, double vacuum)."""
    p0 = poisson_pmf(lam, 0)
    return {
        ("lam", "lam"): 1.0,
        ("lam", "o"): -p0,
        ("o", "lam"): -p0,
        ("o", "o"): p0 * p0,
    }


def _interval_box(cell: StatCell, eps: float) -> tuple[float, float, float]:
    """(n, lower, upper) box on a cell's true gain from its event total."""
    if cell.n == 0:
        return 0.0, 0.0, 1.0
    interval = chernoff_interval(cell.gain_events, eps)
    return float(cell.n), max(0.0, interval.lower / cell.n), min(1.0, interval.upper / cell.n)


def _error_box(cell: StatCell, eps: float) -> tuple[float, float, float]:
    if cell.n == 0:
        return 0.0, 0.0, 1.0
    interval = chernoff_interval(cell.error_events, eps)
    return float(cell.n), max(0.0, interval.lower / cell.n), min(1.0, interval.upper / cell.n)


def _yield_value(gains: dict[tuple[str, str], float], nu: float, omega: float) -> float:
    coeffs = decoy_numerator_coefficients(nu, omega)
    numerator = sum(coeffs[pair] * gains[pair] for pair in coeffs)
    return numerator / decoy_denominator(nu, omega)


def y11_asymptotic(expected: StatTable, d: str) -> float:
    """Closed-form single-photon yield bound on model expectations."""
    gains = {pair: expected.cell(pair[0], pair[1], d).q for pair in YIELD_CELL_ORDER}
    return _yield_value(gains, expected.intensity("nu"), expected.intensity("omega"))


def estimate_y11_original(observed: StatTable, d: str, eps: float | None) -> float:
    """Lower-bound the single-photon yield of basis pairing ``d`` using only
    that pairing's cells and independent per-cell confidence boxes.

    Result is clamped to [0, 1]; ``eps=None`` gives the zero-width bound.
    """
    nu, omega = observed.intensity("nu"), observed.intensity("omega")
    cells = {pair: observed.cell(pair[0], pair[1], d) for pair in YIELD_CELL_ORDER}
    if eps is None:
        value = _yield_value({pair: c.q for pair, c in cells.items()}, nu, omega)
        return min(1.0, max(0.0, value))
    coeffs = decoy_numerator_coefficients(nu, omega)
    boxes = [_interval_box(cells[pair], eps) for pair in YIELD_CELL_ORDER]
    program = LinearProgram(
        objective=tuple(coeffs[pair] for pair in YIELD_CELL_ORDER),
        var_lower=tuple(b[1] for b in boxes),
        var_upper=tuple(b[2] for b in boxes),
        maximize=False,
    )
    value = solve_lp(program).value / decoy_denominator(nu, omega)
    return min(1.0, max(0.0, value))


def estimate_E_original(observed: StatTable, d: str, lam: str, eps: float | None) -> float:
    """Upper-bound the single-photon error yield of pairing ``d`` from the
    cells at decoy intensity ``lam`` ("nu" or "omega"). Clamped at 0 below.
    """
    if lam not in ("nu", "omega"):
        raise ValueError(f"error bound needs a decoy intensity role, got {lam!r}")
    value = _error_bound_from_cells(
        same=observed.cell(lam, lam, d),
        a_side=observed.cell(lam, "o", d),
        b_side=observed.cell("o", lam, d),
        vacuum=observed.cell("o", "o", d),
        lam_value=observed.intensity(lam),
        eps=eps,
        pair_rows=False,
    )
    return value


def _error_bound_from_cells(
    same: StatCell,
    a_side: StatCell,
    b_side: StatCell,
    vacuum: StatCell,
    lam_value: float,
    eps: float | None,
    pair_rows: bool,
) -> float:
    """Shared 4-cell error-yield maximization.

    With ``pair_rows`` the two cross sums (one-sided pair, same+vacuum pair)
    are constrained by their own intervals, which is what the joint estimator
    adds on top of the plain boxes.
    """
    p0 = poisson_pmf(lam_value, 0)
    p1 = poisson_pmf(lam_value, 1)
    coeffs = (1.0, -p0, -p0, p0 * p0)
    cells = (same, a_side, b_side, vacuum)
    if eps is None:
        numerator = sum(c * cell.t for c, cell in zip(coeffs, cells))
        return max(0.0, numerator / (p1 * p1))
    boxes = [_error_box(cell, eps) for cell in cells]
    rows: list[Row] = []
    if pair_rows:
        rows.extend(_sum_rows(cells, ((1, 2), (0, 3)), eps))
    program = LinearProgram(
        objective=coeffs,
        var_lower=tuple(b[1] for b in boxes),
        var_upper=tuple(b[2] for b in boxes),
        rows=rows,
        maximize=True,
    )
    value = solve_lp(program).value / (p1 * p1)
    return max(0.0, value)


def _sum_rows(cells: tuple[StatCell, ...], groups: tuple[tuple[int, ...], ...], eps: float,
              events: str = "error") -> list[Row]:
    """Interval rows on summed event totals across cell groups, expressed on
    the per-cell probability variables (coefficients are trial counts,
    normalized for conditioning)."""
    rows = []
    for group in groups:
        total = sum((cells[i].error_events if events == "error" else cells[i].gain_events)
                    for i in group)
        scale = max((cells[i].n for i in group), default=0)
        if scale == 0:
            continue
        interval = chernoff_interval(total, eps)
        coeffs = [0.0] * len(cells)
        for i in group:
            coeffs[i] = cells[i].n / scale
        rows.append(Row(coeffs=tuple(coeffs), lower=max(0.0, interval.lower) / scale,
                        upper=interval.upper / scale))
    return rows


@dataclass(frozen=True)
class OriginalEstimates:
    """Everything the per-basis pipeline certifies about one observed table.

    ``e_upper`` holds the error-yield bounds indexed [intensity role][basis
    pairing]; ``e11_upper`` the derived error-rate bounds (capped at 1, and
    forced to 1 whenever the matching yield bound collapses to 0);
    ``c_lower`` the frame-independent quality statistic built from the four
    equatorial pairings.
    """

    y11_lower: dict[str, float]
    e_upper: dict[str, dict[str, float]]
    e11_upper: dict[str, float]
    c_lower: float


def original_pipeline(observed: StatTable, eps: float | None) -> OriginalEstimates:
    """Run the full per-basis estimation chain on one observed table."""
    y11_lower = {d: estimate_y11_original(observed, d, eps) for d in ALL_MATCHED_LABELS}
    e_upper = {
        lam: {d: estimate_E_original(observed, d, lam, eps) for d in ALL_MATCHED_LABELS}
        for lam in ("nu", "omega")
    }
    e11_upper: dict[str, float] = {}
    for d in ALL_MATCHED_LABELS:
        y = y11_lower[d]
        if y <= 0.0:
            e11_upper[d] = 1.0
        else:
            e11_upper[d] = min(1.0, min(e_upper["nu"][d], e_upper["omega"][d]) / y)
    c_lower = sum((1.0 - 2.0 * min(e11_upper[d], 0.5)) ** 2 for d in ATOMIC_DECOY_LABELS)
    return OriginalEstimates(y11_lower=y11_lower, e_upper=e_upper, e11_upper=e11_upper, c_lower=c_lower)
