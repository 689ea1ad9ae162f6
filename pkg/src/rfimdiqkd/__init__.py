"""Simulation and estimation toolkit for reference-frame-independent
measurement-device-independent QKD with decoy states.

The package splits into a physics layer (``channel``: expected statistics,
a single-photon oracle, a Monte Carlo cross-check), an estimation layer
(``original``: per-basis decoy bounds; ``improved``: pooled bounds with
cross-cell constraints), and a security layer (``keyrate``) with a particle
swarm ``optimizer`` on top. The ``cli`` module exposes all of it as the
``rfimdi`` command.
"""

from .bounds import (
    BoundedObservable,
    chernoff_interval,
    lower_coefficient,
    symmetric_coefficient,
    upper_coefficient,
)
from .channel import (
    ChannelConfig,
    SinglePhotonTruth,
    arm_transmittance,
    expected_statistics,
    mc_oracle,
    single_photon_truth,
)
from .core import (
    ALL_MATCHED_LABELS,
    ATOMIC_DECOY_LABELS,
    DECOY_PAIR_LABELS,
    DeviceParams,
    EstimationInfeasibleError,
    IntensityPlan,
    JOINT_DECOY_LABEL,
    NO_BASIS_LABEL,
    OriginalPlan,
    ParameterValidationError,
    SIGNAL_LABEL,
    SolverError,
    StatCell,
    StatTable,
    binary_entropy,
    cell_selection_probabilities,
    pair_label,
    poisson_pmf,
    pool,
)
from .improved import (
    ImprovedEstimates,
    estimate_c_improved,
    estimate_E_improved,
    estimate_y11_joint,
    estimate_y11_per_basis,
    improved_pipeline,
    per_basis_estimates,
    pooled_decoy_cell,
)
from .keyrate import (
    KeyRateReport,
    asymptotic_report,
    compute_uv,
    finite_report,
    ideal_asymptotic_report,
    information_leakage,
    key_rate_improved,
    key_rate_original,
    single_photon_rate,
)
from .lpkit import ConvexQuadraticProgram, LinearProgram, Row, Solution, solve_cqp, solve_lp
from .optimizer import (
    OptimizationResult,
    PsoConfig,
    improved_plan_bounds,
    optimize,
    optimize_plan,
    original_plan_bounds,
    plan_from_vector,
    vector_from_plan,
)
from .original import (
    OriginalEstimates,
    decoy_denominator,
    decoy_numerator_coefficients,
    estimate_E_original,
    estimate_y11_original,
    original_pipeline,
    y11_asymptotic,
)
from .sampling import TrialAllocation, allocate, observe

__version__ = "0.1.0"

__all__ = [
    "ALL_MATCHED_LABELS",
    "ATOMIC_DECOY_LABELS",
    "BoundedObservable",
    "ChannelConfig",
    "ConvexQuadraticProgram",
    "DECOY_PAIR_LABELS",
    "DeviceParams",
    "EstimationInfeasibleError",
    "ImprovedEstimates",
    "IntensityPlan",
    "JOINT_DECOY_LABEL",
    "KeyRateReport",
    "LinearProgram",
    "NO_BASIS_LABEL",
    "OptimizationResult",
    "OriginalEstimates",
    "OriginalPlan",
    "ParameterValidationError",
    "PsoConfig",
    "Row",
    "SIGNAL_LABEL",
    "SinglePhotonTruth",
    "Solution",
    "SolverError",
    "StatCell",
    "StatTable",
    "TrialAllocation",
    "allocate",
    "arm_transmittance",
    "asymptotic_report",
    "binary_entropy",
    "cell_selection_probabilities",
    "chernoff_interval",
    "compute_uv",
    "decoy_denominator",
    "decoy_numerator_coefficients",
    "estimate_E_improved",
    "estimate_E_original",
    "estimate_c_improved",
    "estimate_y11_joint",
    "estimate_y11_original",
    "estimate_y11_per_basis",
    "expected_statistics",
    "finite_report",
    "ideal_asymptotic_report",
    "improved_pipeline",
    "improved_plan_bounds",
    "information_leakage",
    "key_rate_improved",
    "key_rate_original",
    "lower_coefficient",
    "mc_oracle",
    "observe",
    "optimize",
    "optimize_plan",
    "original_pipeline",
    "original_plan_bounds",
    "pair_label",
    "per_basis_estimates",
    "plan_from_vector",
    "poisson_pmf",
    "pool",
    "pooled_decoy_cell",
    "single_photon_rate",
    "single_photon_truth",
    "solve_cqp",
    "solve_lp",
    "symmetric_coefficient",
    "upper_coefficient",
    "vector_from_plan",
    "y11_asymptotic",
]
