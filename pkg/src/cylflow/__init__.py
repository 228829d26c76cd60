"""Numerical stable-manifold construction for cylindrical mean curvature flow.

Fields live in Hermite x Fourier spectral bases; see :mod:`cylflow.weighted_space`.
"""

from .errors import (
    AdmissibilityError,
    ConfigError,
    CylflowError,
    DivergenceError,
    DomainError,
    GraphConditionError,
    PreconditionError,
    ResourceError,
    SamplingError,
    ShapeError,
)
from .frozen_solver import (
    CorrectionCoeffs,
    FlowPath,
    FrozenProblem,
    FrozenSolution,
    gamma_solve,
    membership_check,
    ode_bounded_solve,
    solve_frozen,
)
from .kernels import BACKEND
from .modulation import ModulationVector, SymmetryParams, W_eval, dW_eval, modulation_rhs
from .nonlinearity import F_gradient, F_value, GraphFunction, N_apply
from .rescaling import RescalingState, build_rescaling, reconstruct_flow, tangent_flow_limit
from .spectral_operator import LinearizedOp, apply_L, build_modes, dense_spectrum
from .stable_manifold import SeedFunction, fixed_point, path_norm, phi, psi, sample_seed
from .weighted_space import (
    SpaceParams,
    SpectralField,
    inner_product,
    interpolation_check,
    sobolev_norm,
)

__version__ = "0.1.0"
