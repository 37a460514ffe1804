"""Constrained low-thrust orbital transfer simulation.

Gauss-variational-equation dynamics with a Lyapunov tracking controller,
supervised by an incremental reference governor that enforces periapsis,
thrust-magnitude, and eccentricity constraints through sublevel-set or
prediction-based admissibility tests.
"""

from .elements import (
    EARTH_MU,
    Constants,
    FullState,
    SingularElementsError,
    SlowElements,
    ThrustAccel,
    cartesian_to_elements,
    elements_to_cartesian,
    gve_matrix,
    periapsis_radius,
    radius,
    theta_rate,
)
from .controller import WeightMatrix, control, lyapunov_value
from .constraints import ConstraintLimits, c1, c2, c3, reference_admissible_margin
from .admissibility import SolveReport, SublevelSet, c1_star, c2_star, c3_star, is_admissible
from .governor import (
    GovernorConfig,
    GovernorState,
    ModeSet,
    StepDecision,
    build_rotated_p,
    build_rotated_p_set,
    direction_schedule,
    governor_step,
    increment,
    prediction_admissible,
    select_p_des,
)
from .sim import (
    SCHEMA_COLUMNS,
    FlaggedViolationError,
    GovernorEvent,
    InfeasibleStartError,
    IntegrationError,
    SimConfig,
    TrajectoryRecord,
    integrate_segment,
    run_closed_loop,
)

__version__ = "0.1.0"
