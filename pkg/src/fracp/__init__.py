"""Fractional p-Laplacian ground states: operator, energies, constrained solver and identity checks."""

from .energy import (
    EnergyReport,
    gagliardo_energy,
    gagliardo_first_variation,
    gagliardo_gradient,
    potential_energy,
    potential_first_variation,
)
from .errors import (
    ConfigError,
    ConstraintError,
    DomainError,
    FracpError,
    InfeasibleStart,
    KernelMismatch,
    ParseError,
    PointwiseUnsupported,
    QuadratureError,
    SchemaError,
    SolverDiverged,
    StepFailure,
)
from .identities import (
    IdentityReport,
    LimitRow,
    VectorFieldSpec,
    cutoff_limit_study,
    divergence_bracket,
    ibp_check,
    pohozaev_residual,
)
from .io import load_grid, load_profile, store_grid, store_profile
from .kernel import AngularKernel
from .nonlinearity import Nonlinearity, eval_all, initial_guess, make_model
from .operator import QuadSpec, flp_apply, integrand_symmetrized, normalization_constant
from .params import Params, validate
from .profiles import (
    GridSpec,
    PlanarGrid,
    RadialProfile,
    dilate,
    gaussian_bump,
    monotone_resample,
    radial_grid,
    schwarz_symmetrize,
    symmetrize_radial,
)
from .solver import SolveConfig, SolveReport, descend_step, lagrange_check, project_constraint, solve

__all__ = [name for name in dir() if not name.startswith("_")]
