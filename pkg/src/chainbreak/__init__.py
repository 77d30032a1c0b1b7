"""Break times of a slowly pulled chain of Brownian particles.

Simulators for the nonlinear chain and its linearisations, exact Gaussian
second moments, and the Gumbel limit law of the break time.
"""

from .engine import (
    BatchResult,
    CoupledResult,
    PathState,
    SimGrid,
    Trajectory,
    auto_grid,
    first_break,
    grid_for,
    run_paths,
    simulate_coupled,
    simulate_linear_constant,
    simulate_linear_timevarying,
    simulate_nonlinear,
)
from .errors import (
    AssumptionViolation,
    ChainBreakError,
    ConfigError,
    DomainError,
    DomainEscapeError,
    ParameterError,
    RegimeError,
)
from .model import (
    BreakEvent,
    ChainParams,
    LimitLawParams,
    Potential,
    gumbel_cdf,
    limit_law_params,
    make_cosh_potential,
    make_quadratic_potential,
    normalize_break_time,
    position_limit_probs,
    t_star,
    validate_potential,
)
from .stats import seed_stream

__version__ = "0.1.0"
