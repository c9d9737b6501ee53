"""Numerical laboratory for the resonant Navier biharmonic problem

    (−Δ)²u = λ₁²u + u₊ᵖ + f  in Ω,   u = Δu = 0 on ∂Ω,

on rectangles: operators, spectra, a priori estimate bookkeeping, Newton
solves and homotopy continuation from an explicitly known solution.
"""

from .eigen import (
    EigenPair,
    WeightedSpectrum,
    check_weight_monotonicity,
    smallest_eigenpairs,
    solve_linear,
    weighted_eigenvalues,
    zero_set_fraction,
)
from .errors import (
    ContinuationFailure,
    DegenerateLinearization,
    HypothesisViolation,
    InternalConsistencyError,
    InvalidArgument,
    NoConvergence,
    PreconditionViolation,
)
from .estimates import (
    Decomposition,
    ExponentBundle,
    ProblemSpec,
    base_spectrum,
    check_hypotheses,
    decompose,
    exponent_bundle,
    hardy_sobolev_ratio,
    make_problem,
    nondegeneracy_radius,
    resonance_identity_residual,
    sign_condition,
)
from .grid import (
    DTYPE,
    Field,
    Grid2D,
    SparseOperator,
    biharmonic_matrix,
    build_grid,
    integrate,
    laplacian_matrix,
    lp_norm,
    normalize_l2,
)
from .solver import (
    ContinuationTrace,
    IndexCertificate,
    Solution,
    fixed_point_map,
    homotopy_path,
    linearization,
    linearization_index,
    newton_solve,
    reference_forcing,
    residual,
)

__version__ = "0.1.0"

__all__ = [
    "base_spectrum",
    "biharmonic_matrix",
    "build_grid",
    "check_hypotheses",
    "check_weight_monotonicity",
    "ContinuationFailure",
    "ContinuationTrace",
    "decompose",
    "Decomposition",
    "DegenerateLinearization",
    "DTYPE",
    "EigenPair",
    "exponent_bundle",
    "ExponentBundle",
    "Field",
    "fixed_point_map",
    "Grid2D",
    "hardy_sobolev_ratio",
    "homotopy_path",
    "HypothesisViolation",
    "IndexCertificate",
    "integrate",
    "InternalConsistencyError",
    "InvalidArgument",
    "laplacian_matrix",
    "linearization",
    "linearization_index",
    "lp_norm",
    "make_problem",
    "newton_solve",
    "NoConvergence",
    "nondegeneracy_radius",
    "normalize_l2",
    "PreconditionViolation",
    "ProblemSpec",
    "reference_forcing",
    "residual",
    "resonance_identity_residual",
    "sign_condition",
    "smallest_eigenpairs",
    "Solution",
    "solve_linear",
    "SparseOperator",
    "weighted_eigenvalues",
    "WeightedSpectrum",
    "zero_set_fraction",
]
