"""Pseudo-spectral solver and verification lab for the damped
Zakharov-Kuznetsov equation on periodic boxes (n = 2, 3)."""

from .damping import (
    DampingProfile,
    WeightFunction,
    load_profile_table,
    make_localized_damping,
    make_uniform_damping,
    make_weight,
    validate_damping,
)
from .dynamics import (
    BlowUpError,
    SimulationState,
    SolverConfig,
    linear_symbol,
    nonlinear_rhs,
    propagate_linear,
    run,
    step,
)
from .functionals import (
    EnergyRecord,
    compute_b,
    compute_record,
    cubic_integral,
    energy,
    gn_report,
    h1_norm_sq,
    h_balance_residual,
    hamiltonian,
    kato_check,
    l2_balance_residual,
    weighted_cubic_report,
    observability_ratio,
)
from .grid import (
    GridSpec,
    RealField,
    SpectralField,
    dealias,
    derivative,
    inverse_transform,
    quadrature,
    quadrature_weighted,
    transform,
)

__version__ = "0.1.0"
