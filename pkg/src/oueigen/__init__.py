"""Exact eigenfunctions of multidimensional Ornstein-Uhlenbeck operators."""

__version__ = "0.1.0"

from .eigenfunction import Eigenfunction, ResonantBundle, collinearity_defect
from .errors import *  # noqa: F401,F403
from .general import (
    BasisSet,
    SparseOperatorMatrix,
    assemble_matrix,
    basis_closure,
    full_basis,
    general_eigenfunction,
    general_eigensystem,
    graded_basis,
    solve_all,
    solve_eigenfunction,
)
from .mc import KoopmanReport, SamplerConfig, koopman_check, sample_exact, sample_paths
from .oracle import apply_adjoint, apply_diffusion, apply_drift, apply_ou, residual, residual_l2
from .pde import (
    EigenExpansion,
    KBESolution,
    adjoint_eigenfunction,
    expansion_coefficients,
    invariant_density,
    kbe_solution,
    kbe_solve,
)
from .poly import (
    GaussianWeightedPolynomial,
    Polynomial,
    gaussian_expectation,
    gaussian_inner,
    gaussian_norm,
    hermite,
    hli,
    laguerre,
    linear_form_power,
    partial_derivative,
    wirtinger_derivative,
)
from .special import (
    CaseClassification,
    classify,
    normal_eigenfunction,
    selfadjoint_eigenfunction,
    special_eigenfunction,
    special_eigensystem,
)
from .system import (
    CovarianceMatrix,
    OUSystem,
    SpectralDecomposition,
    Tolerances,
    finite_time_covariance,
    random_stable_system,
    spectral_decomposition,
    spectrum,
    stationary_covariance,
    validate_system,
)
