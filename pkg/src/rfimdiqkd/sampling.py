"""Finite-trial bookkeeping: splitting a session into cells and drawing data.

``allocate`` converts a source plan and a total number of transmission
windows into per-cell trial counts (windows whose basis pair is sifted away
are tracked, not silently dropped). ``observe`` then produces an observed
table either at the model expectation (the default, matching asymptotic
analyses run at finite precision) or by binomial sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CellKey,
    IntensityPlan,
    OriginalPlan,
    ParameterValidationError,
    StatCell,
    StatTable,
    cell_selection_probabilities,
)

__all__ = ["TrialAllocation", "allocate", "observe"]


@dataclass(frozen=True)
class TrialAllocation:
    """Deterministic split of ``n_tot`` windows across retained cells.

    ``n_discarded`` counts the sifted windows; cell counts plus discarded
    always add up to ``n_tot`` exactly.
    """

    n_tot: int
    cells: dict[CellKey, int]
    n_discarded: int

    def __post_init__(self) -> None:
        total = sum(self.cells.values()) + self.n_discarded
        if total != self.n_tot or self.n_discarded < 0:
            raise ParameterValidationError(
                f"allocation does not partition the session: cells+discarded={total}, n_tot={self.n_tot}"
            )


def allocate(plan: IntensityPlan | OriginalPlan, n_tot: int) -> TrialAllocation:
    """Assign each retained cell its expected share of ``n_tot`` windows.

    Counts are rounded half-up per cell; any rounding surplus is removed from
    the largest cells so the partition invariant holds exactly.
    """
    if n_tot <= 0:
        raise ParameterValidationError(f"n_tot must be positive, got {n_tot}")
    probabilities = cell_selection_probabilities(plan)
    counts = {key: int(round(p * n_tot)) for key, p in probabilities.items()}
    surplus = sum(counts.values()) - n_tot
    if surplus > 0:
        for key in sorted(counts, key=lambda k: (-counts[k], k)):
            take = min(surplus, counts[key])
            counts[key] -= take
            surplus -= take
            if surplus == 0:
                break
    return TrialAllocation(n_tot=n_tot, cells=counts, n_discarded=n_tot - sum(counts.values()))


def observe(
    expected: StatTable,
    allocation: TrialAllocation,
    mode: str = "expected",
    seed: int | None = None,
) -> StatTable:
    """Produce the observed table for one session.

    Modes:
        ``"expected"``: each cell reports exactly the model gain and error
            yield; only the trial counts are finite. Event totals are then
            real-valued, which is what fluctuation analyses of expected
            behavior use.
        ``"sampled"``: successes are drawn Binomial(n, q) and errors
            Binomial(successes, t/q) from a generator seeded with ``seed``,
            consumed in sorted cell order for reproducibility.
    """
    if mode not in ("expected", "sampled"):
        raise ParameterValidationError(f"unknown observation mode {mode!r}")
    table = StatTable(kind="observed", intensities=dict(expected.intensities))
    if mode == "expected":
        for key in sorted(allocation.cells):
            n = allocation.cells[key]
            cell = expected.cells.get(key)
            if cell is None:
                raise ParameterValidationError(f"expected table lacks allocated cell {key}")
            table.cells[key] = StatCell(n=n, q=cell.q, t=cell.t)
        return table
    rng = np.random.default_rng(seed)
    for key in sorted(allocation.cells):
        n = allocation.cells[key]
        cell = expected.cells.get(key)
        if cell is None:
            raise ParameterValidationError(f"expected table lacks allocated cell {key}")
        successes = int(rng.binomial(n, cell.q)) if n > 0 else 0
        if successes > 0 and cell.q > 0.0:
            errors = int(rng.binomial(successes, min(1.0, cell.t / cell.q)))
        else:
            errors = 0
        table.cells[key] = StatCell(
            n=n,
            q=successes / n if n > 0 else 0.0,
            t=errors / n if n > 0 else 0.0,
        )
    return table
