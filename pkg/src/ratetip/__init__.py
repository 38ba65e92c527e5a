"""Rate-induced tipping in fast/slow systems.

Simulation of ramped fast/slow models in original and co-moving coordinates,
equilibrium and Hopf analysis, and limit-cycle sweeps over the forcing rate.
"""

__version__ = "0.1.0"

from .analysis import (
    EquilibriumReport,
    HopfReport,
    Stability,
    classify,
    critical_rate,
    eigenvalues_2x2,
    eigenvalues_analytic_ashwin,
    jacobian_comoving,
    locate_hopf_numeric,
    solve_equilibrium,
)
from .cycles import (
    CycleConfig,
    LimitCycleResult,
    SweepResult,
    explosion_rate,
    find_limit_cycle,
    qse_comoving,
    rate_sweep,
    spiral_states,
    spiral_trajectory,
)
from .errors import (
    BracketFailure,
    InsufficientData,
    IntegrationFailure,
    InvalidParameters,
    NoConvergence,
    NonFiniteState,
    NoSignChange,
    OutOfRange,
    RateTipError,
    SingularFold,
    StepBudgetExceeded,
    StepUnderflow,
)
from .models import (
    AshwinParams,
    CoMovingState,
    Family,
    FoldPoint,
    FullState,
    VdpParams,
    comoving_rhs,
    critical_manifold,
    fold_points,
    from_comoving,
    full_rhs,
    make_params,
    to_comoving,
)
from .odeint import EventSpec, IntegratorConfig, Trajectory, integrate, integrate_with_events

__all__ = [
    "__version__",
    "AshwinParams",
    "BracketFailure",
    "classify",
    "comoving_rhs",
    "CoMovingState",
    "critical_manifold",
    "critical_rate",
    "CycleConfig",
    "eigenvalues_2x2",
    "eigenvalues_analytic_ashwin",
    "EquilibriumReport",
    "EventSpec",
    "explosion_rate",
    "Family",
    "find_limit_cycle",
    "fold_points",
    "FoldPoint",
    "from_comoving",
    "full_rhs",
    "FullState",
    "HopfReport",
    "InsufficientData",
    "integrate",
    "integrate_with_events",
    "IntegrationFailure",
    "IntegratorConfig",
    "InvalidParameters",
    "jacobian_comoving",
    "LimitCycleResult",
    "locate_hopf_numeric",
    "make_params",
    "NoConvergence",
    "NonFiniteState",
    "NoSignChange",
    "OutOfRange",
    "qse_comoving",
    "rate_sweep",
    "RateTipError",
    "SingularFold",
    "solve_equilibrium",
    "spiral_states",
    "spiral_trajectory",
    "Stability",
    "StepBudgetExceeded",
    "StepUnderflow",
    "SweepResult",
    "to_comoving",
    "Trajectory",
    "VdpParams",
]
