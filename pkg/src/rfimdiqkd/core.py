"""Domain types shared by every stage of the toolkit.

The protocol bookkeeping lives here: source plans (which intensity and coding
basis each user selects, with what probability), detector-side device
parameters, and the gain / error-yield tables that the estimators consume.
Everything is an immutable value object; operations are pure functions.

Cell addressing convention: a table cell is keyed by
``(intensity_role_a, intensity_role_b, basis_label)`` where the roles are the
strings ``"mu"``, ``"nu"``, ``"omega"``, ``"o"`` and the basis label is one of

* the five matched pairs ``"XX", "XY", "YX", "YY", "ZZ"``,
* a one-sided label ``"X", "Y", "Z"`` naming the non-vacuum party's basis for
  cells where exactly one party sent vacuum,
* ``"none"`` for the double-vacuum cell (no basis was chosen anywhere),
* a pooled label such as ``"XX+YY"`` or ``"D"`` when pre-pooled statistics are
  stored explicitly.

Vacuum carries no basis of its own in the four-intensity protocol, so
one-sided-vacuum events are classified by the other party's basis; the
double-vacuum cell is shared by every estimation program.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

__all__ = [
    "ATOMIC_DECOY_LABELS",
    "ALL_MATCHED_LABELS",
    "DECOY_PAIR_LABELS",
    "DeviceParams",
    "EstimationInfeasibleError",
    "IntensityPlan",
    "JOINT_DECOY_LABEL",
    "NO_BASIS_LABEL",
    "OriginalPlan",
    "ParameterValidationError",
    "SIGNAL_LABEL",
    "SolverError",
    "StatCell",
    "StatTable",
    "binary_entropy",
    "cell_selection_probabilities",
    "label_sides",
    "pair_label",
    "poisson_pmf",
    "pool",
]


class ParameterValidationError(ValueError):
    """A constructor argument violates its documented domain."""


class EstimationInfeasibleError(RuntimeError):
    """Interval constraints admit no solution: the input statistics are
    mutually inconsistent (corrupted or hand-edited data)."""


class SolverError(RuntimeError):
    """A numeric solver failed to converge on a well-posed program."""


ATOMIC_DECOY_LABELS: tuple[str, ...] = ("XX", "XY", "YX", "YY")
SIGNAL_LABEL = "ZZ"
ALL_MATCHED_LABELS: tuple[str, ...] = ATOMIC_DECOY_LABELS + (SIGNAL_LABEL,)
JOINT_DECOY_LABEL = "D"
NO_BASIS_LABEL = "none"

DECOY_PAIR_LABELS: tuple[str, ...] = (
    "XX+XY",
    "XX+YX",
    "XX+YY",
    "XY+YX",
    "XY+YY",
    "YX+YY",
)

_INTENSITY_ROLES = ("mu", "nu", "omega", "o")


def pair_label(d1: str, d2: str) -> str:
    """Canonical pooled label for two distinct matched decoy-basis labels."""
    if d1 not in ATOMIC_DECOY_LABELS or d2 not in ATOMIC_DECOY_LABELS or d1 == d2:
        raise ParameterValidationError(f"not a decoy-basis pair: {d1!r}, {d2!r}")
    first, second = sorted((d1, d2), key=ATOMIC_DECOY_LABELS.index)
    return f"{first}+{second}"


def label_sides(label: str) -> tuple[str, str]:
    """Split a matched label into (Alice basis, Bob basis)."""
    if label not in ALL_MATCHED_LABELS:
        raise ParameterValidationError(f"not a matched basis label: {label!r}")
    return label[0], label[1]


def poisson_pmf(intensity: float, k: int) -> float:
    """Probability that a phase-randomized pulse of the given mean photon
    number contains exactly ``k`` photons.

    Args:
        intensity: mean photon number, >= 0.
        k: photon count, non-negative integer.

    Returns:
        intensity**k * exp(-intensity) / k!
    """
    if intensity < 0.0:
        raise ParameterValidationError(f"intensity must be >= 0, got {intensity}")
    if k < 0 or k != int(k):
        raise ParameterValidationError(f"photon count must be a non-negative integer, got {k}")
    k = int(k)
    if intensity == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(intensity) - intensity - math.lgamma(k + 1))


def binary_entropy(p: float) -> float:
    """Shannon entropy of a bit with bias ``p``, in bits; H(0) = H(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ParameterValidationError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True, slots=True)
class DeviceParams:
    """Detector and link constants of a symmetric relay-based setup.

    Attributes:
        eta_d: detector efficiency, in (0, 1].
        p_d: dark-count probability per detector per window.
        e_d: misalignment error probability applied to successful events.
        f_e: reconciliation (error-correction) efficiency, >= 1.
        epsilon: failure probability of each interval estimate, in (0, 1).
        alpha_db_per_km: fiber loss coefficient.
        beta_a: Alice's reference-frame angle, radians.
        beta_b: Bob's reference-frame angle, radians. Only the difference
            ``beta_b - beta_a`` is physical.
    """

    eta_d: float
    p_d: float
    e_d: float
    f_e: float
    epsilon: float
    alpha_db_per_km: float
    beta_a: float = 0.0
    beta_b: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.eta_d <= 1.0:
            raise ParameterValidationError(f"eta_d must be in (0, 1], got {self.eta_d}")
        for name in ("p_d", "e_d"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterValidationError(f"{name} must be in [0, 1], got {value}")
        if self.f_e < 1.0:
            raise ParameterValidationError(f"f_e must be >= 1, got {self.f_e}")
        if not 0.0 < self.epsilon < 1.0:
            raise ParameterValidationError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.alpha_db_per_km < 0.0:
            raise ParameterValidationError(f"alpha_db_per_km must be >= 0, got {self.alpha_db_per_km}")

    @property
    def frame_offset(self) -> float:
        """Relative reference-frame angle seen by the equatorial bases."""
        return self.beta_b - self.beta_a

    @classmethod
    def default(cls, **overrides: float) -> "DeviceParams":
        """Representative parameter set used throughout the bundled presets:
        25% detectors, 1e-6 dark counts, 0.5% misalignment, f_e = 1.16,
        epsilon = 1e-7, 0.2 dB/km fiber."""
        values = dict(
            eta_d=0.25,
            p_d=1e-6,
            e_d=0.005,
            f_e=1.16,
            epsilon=1e-7,
            alpha_db_per_km=0.2,
            beta_a=0.0,
            beta_b=0.0,
        )
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> dict[str, float]:
        return {
            "eta_d": self.eta_d,
            "p_d": self.p_d,
            "e_d": self.e_d,
            "f_e": self.f_e,
            "epsilon": self.epsilon,
            "alpha_db_per_km": self.alpha_db_per_km,
            "beta_a": self.beta_a,
            "beta_b": self.beta_b,
        }


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ParameterValidationError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True, slots=True)
class IntensityPlan:
    """Source plan of the four-intensity protocol.

    The signal basis Z is driven only at intensity ``mu``; the X and Y bases
    only at the decoy intensities ``nu`` and ``omega``; vacuum ``o`` carries no
    basis. Each user independently selects mu / nu / omega / o with the given
    probabilities, and splits nu or omega evenly between X and Y.

    Invariants: nu > omega > 0, mu >= 0, probabilities within the simplex.
    """

    mu: float
    nu: float
    omega: float
    pr_mu: float
    pr_nu: float
    pr_omega: float

    def __post_init__(self) -> None:
        if self.mu < 0.0:
            raise ParameterValidationError(f"mu must be >= 0, got {self.mu}")
        if not self.nu > self.omega > 0.0:
            raise ParameterValidationError(
                f"decoy intensities must satisfy nu > omega > 0, got nu={self.nu}, omega={self.omega}"
            )
        for name in ("pr_mu", "pr_nu", "pr_omega"):
            _check_probability(name, getattr(self, name))
        if self.pr_mu + self.pr_nu + self.pr_omega > 1.0 + 1e-12:
            raise ParameterValidationError("selection probabilities exceed 1")

    @property
    def pr_o(self) -> float:
        return max(0.0, 1.0 - self.pr_mu - self.pr_nu - self.pr_omega)

    def intensity(self, role: str) -> float:
        if role == "mu":
            return self.mu
        if role == "nu":
            return self.nu
        if role == "omega":
            return self.omega
        if role == "o":
            return 0.0
        raise ParameterValidationError(f"unknown intensity role {role!r}")

    def intensities(self) -> dict[str, float]:
        return {"mu": self.mu, "nu": self.nu, "omega": self.omega, "o": 0.0}

    def to_dict(self) -> dict[str, float]:
        return {
            "mu": self.mu,
            "nu": self.nu,
            "omega": self.omega,
            "pr_mu": self.pr_mu,
            "pr_nu": self.pr_nu,
            "pr_omega": self.pr_omega,
        }


@dataclass(frozen=True, slots=True)
class OriginalPlan:
    """Source plan of the three-intensity prior-art protocol.

    Basis and intensity are chosen independently: Z with probability ``pr_z``
    (X and Y split the rest evenly), and nu / omega / o with probabilities
    ``pr_nu`` / ``pr_omega`` / remainder on every basis. Intensity nu doubles
    as the key-generating signal intensity.
    """

    nu: float
    omega: float
    pr_z: float
    pr_nu: float
    pr_omega: float

    def __post_init__(self) -> None:
        if not self.nu > self.omega > 0.0:
            raise ParameterValidationError(
                f"decoy intensities must satisfy nu > omega > 0, got nu={self.nu}, omega={self.omega}"
            )
        for name in ("pr_z", "pr_nu", "pr_omega"):
            _check_probability(name, getattr(self, name))
        if self.pr_nu + self.pr_omega > 1.0 + 1e-12:
            raise ParameterValidationError("intensity probabilities exceed 1")

    @property
    def pr_o(self) -> float:
        return max(0.0, 1.0 - self.pr_nu - self.pr_omega)

    def intensity(self, role: str) -> float:
        if role == "nu":
            return self.nu
        if role == "omega":
            return self.omega
        if role == "o":
            return 0.0
        raise ParameterValidationError(f"unknown intensity role {role!r}")

    def intensities(self) -> dict[str, float]:
        return {"nu": self.nu, "omega": self.omega, "o": 0.0}

    def to_dict(self) -> dict[str, float]:
        return {
            "nu": self.nu,
            "omega": self.omega,
            "pr_z": self.pr_z,
            "pr_nu": self.pr_nu,
            "pr_omega": self.pr_omega,
        }


@dataclass(frozen=True, slots=True)
class StatCell:
    """Per-cell statistics: trial count, gain, error yield.

    ``n * q`` and ``n * t`` are the event totals that interval bounds act on.
    """

    n: int
    q: float
    t: float

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ParameterValidationError(f"trial count must be >= 0, got {self.n}")
        if not 0.0 <= self.q <= 1.0:
            raise ParameterValidationError(f"gain must be in [0, 1], got {self.q}")
        if not -1e-12 <= self.t <= self.q + 1e-12:
            raise ParameterValidationError(f"error yield must satisfy 0 <= t <= q, got t={self.t}, q={self.q}")

    @property
    def gain_events(self) -> float:
        return self.n * self.q

    @property
    def error_events(self) -> float:
        return self.n * self.t


CellKey = tuple[str, str, str]

_CSV_HEADER = ("intensity_a", "intensity_b", "basis_label", "n", "q", "t")


@dataclass
class StatTable:
    """Gains and error yields indexed by (intensity pair, basis label).

    Attributes:
        kind: ``"expected"`` for model expectations, ``"observed"`` for
            finite-sample data carrying real trial counts.
        intensities: role -> mean photon number, used for serialization and by
            the estimators' photon-number statistics.
        cells: (role_a, role_b, label) -> StatCell.
    """

    kind: str
    intensities: dict[str, float]
    cells: dict[CellKey, StatCell] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("expected", "observed"):
            raise ParameterValidationError(f"kind must be 'expected' or 'observed', got {self.kind!r}")
        for role in self.intensities:
            if role not in _INTENSITY_ROLES:
                raise ParameterValidationError(f"unknown intensity role {role!r}")

    def intensity(self, role: str) -> float:
        try:
            return self.intensities[role]
        except KeyError:
            raise ParameterValidationError(f"table carries no intensity for role {role!r}") from None

    def cell(self, role_a: str, role_b: str, label: str) -> StatCell:
        try:
            return self.cells[(role_a, role_b, label)]
        except KeyError:
            raise ParameterValidationError(f"missing cell ({role_a}, {role_b}, {label})") from None

    def has_cell(self, role_a: str, role_b: str, label: str) -> bool:
        return (role_a, role_b, label) in self.cells

    def set_cell(self, role_a: str, role_b: str, label: str, cell: StatCell) -> None:
        self.cells[(role_a, role_b, label)] = cell

    def to_csv(self, path: str) -> None:
        """Write one row per cell; intensity columns carry the physical mean
        photon numbers at 17 significant digits."""
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(_CSV_HEADER)
            for (role_a, role_b, label) in sorted(self.cells):
                cell = self.cells[(role_a, role_b, label)]
                writer.writerow(
                    [
                        format(self.intensity(role_a), ".17g"),
                        format(self.intensity(role_b), ".17g"),
                        label,
                        cell.n,
                        format(cell.q, ".17g"),
                        format(cell.t, ".17g"),
                    ]
                )

    @classmethod
    def from_csv(cls, path: str, intensities: Mapping[str, float], kind: str = "observed") -> "StatTable":
        """Read a table written by :meth:`to_csv`.

        Intensity values are mapped back to roles through ``intensities``
        (relative tolerance 1e-12). When two roles share a value (a matched
        mu = nu plan), signal-side labels resolve to ``mu`` first and decoy
        labels to ``nu`` / ``omega``, which keeps the mapping deterministic.
        """
        by_value = sorted(intensities.items())
        table = cls(kind=kind, intensities=dict(intensities))

        def resolve(value: float, prefer_signal: bool) -> str:
            matches = [
                role
                for role, v in by_value
                if math.isclose(v, value, rel_tol=1e-12, abs_tol=1e-300)
            ]
            if not matches:
                raise ParameterValidationError(f"intensity value {value} matches no declared role")
            if len(matches) == 1:
                return matches[0]
            order = ("mu", "nu", "omega", "o") if prefer_signal else ("nu", "omega", "o", "mu")
            for role in order:
                if role in matches:
                    return role
            return matches[0]

        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(header) != _CSV_HEADER:
                raise ParameterValidationError(f"unexpected table header: {header}")
            for row in reader:
                if not row:
                    continue
                value_a, value_b, label, n, q, t = row
                signalish = label in ("ZZ", "Z")
                role_a = resolve(float(value_a), signalish)
                role_b = resolve(float(value_b), signalish)
                table.set_cell(role_a, role_b, label, StatCell(n=int(n), q=float(q), t=float(t)))
        return table


def cell_selection_probabilities(plan: "IntensityPlan | OriginalPlan") -> dict[CellKey, float]:
    """Probability that one transmission window lands in each retained cell.

    Windows not listed here (mismatched-basis pairs) are sifted away. The
    four-intensity protocol ties basis to intensity, so its mixed
    signal/decoy intensity pairs never share a basis and are all discarded;
    the three-intensity protocol discards only Z-vs-equatorial pairs.
    """
    out: dict[CellKey, float] = {}
    if isinstance(plan, IntensityPlan):
        pr = {"mu": plan.pr_mu, "nu": plan.pr_nu, "omega": plan.pr_omega, "o": plan.pr_o}
        out[("mu", "mu", SIGNAL_LABEL)] = pr["mu"] ** 2
        out[("mu", "o", "Z")] = pr["mu"] * pr["o"]
        out[("o", "mu", "Z")] = pr["o"] * pr["mu"]
        for la in ("nu", "omega"):
            for lb in ("nu", "omega"):
                for d in ATOMIC_DECOY_LABELS:
                    out[(la, lb, d)] = pr[la] * pr[lb] / 4.0
            for side_basis in ("X", "Y"):
                out[(la, "o", side_basis)] = pr[la] * pr["o"] / 2.0
                out[("o", la, side_basis)] = pr["o"] * pr[la] / 2.0
        out[("o", "o", NO_BASIS_LABEL)] = pr["o"] ** 2
        return out
    if isinstance(plan, OriginalPlan):
        basis_pr = {"X": (1.0 - plan.pr_z) / 2.0, "Y": (1.0 - plan.pr_z) / 2.0, "Z": plan.pr_z}
        intensity_pr = {"nu": plan.pr_nu, "omega": plan.pr_omega, "o": plan.pr_o}
        for la, pa in intensity_pr.items():
            for lb, pb in intensity_pr.items():
                for d in ALL_MATCHED_LABELS:
                    da, db = label_sides(d)
                    out[(la, lb, d)] = pa * pb * basis_pr[da] * basis_pr[db]
        return out
    raise ParameterValidationError(f"unsupported plan type {type(plan).__name__}")


def pool(table: StatTable, labels: Iterable[str], lr: tuple[str, str]) -> StatCell:
    """Pool several basis labels of one intensity pair into one cell.

    Counts add; gains and error yields combine as event-weighted means, so the
    pooled cell's event totals equal the sums of the members' event totals. A
    pool with zero total trials is returned as the degenerate (0, 0, 0) cell.
    """
    role_a, role_b = lr
    total_n = 0
    gain_events = 0.0
    error_events = 0.0
    for label in labels:
        member = table.cell(role_a, role_b, label)
        total_n += member.n
        gain_events += member.gain_events
        error_events += member.error_events
    if total_n == 0:
        return StatCell(n=0, q=0.0, t=0.0)
    return StatCell(n=total_n, q=gain_events / total_n, t=error_events / total_n)
