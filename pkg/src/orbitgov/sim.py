"""Closed-loop simulation: dynamics + controller + scheduled governor updates.

Integrates the coupled slow-element / true-anomaly system under the
Lyapunov control law, holding the modified reference and weight matrix
piecewise constant between governor instants (the control itself is
recomputed continuously from the current state).  Produces a trajectory
record with one row per log sample and one event per governor instant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _integrate, _kernels
from ._integrate import IntegrationError
from .constraints import ConstraintLimits, reference_admissible_margin
from .controller import WeightMatrix, lyapunov_value
from .elements import Constants, FullState, SlowElements
from .governor import GovernorConfig, GovernorState, ModeSet, governor_step, select_p_des

__all__ = [
    "SCHEMA_COLUMNS",
    "SimConfig",
    "TrajectoryRecord",
    "GovernorEvent",
    "FlaggedViolationError",
    "InfeasibleStartError",
    "IntegrationError",
    "integrate_segment",
    "run_closed_loop",
]

# Frozen trajectory schema: column order is a published contract (the
# plotting package validates CSV headers against exactly this list).
SCHEMA_COLUMNS = (
    "t", "a", "e", "inc", "raan", "argp", "theta",
    "ref_a", "ref_e", "ref_inc", "ref_raan", "ref_argp", "p_index",
    "u_s", "u_t", "u_w", "u_norm", "lyapunov",
    "c1", "c2", "c3", "r", "r_p", "dv",
)

_TWO_PI = 2.0 * math.pi


class FlaggedViolationError(RuntimeError):
    """A logged sample violated a constraint beyond the configured tolerance.

    With the governor enabled this should never trigger; it exists so a
    violation can never pass silently.
    """


class InfeasibleStartError(ValueError):
    """Initial state does not satisfy the constraints with margin."""


@dataclass(frozen=True)
class SimConfig:
    """Integrator, logging, and stopping configuration.

    The violation tolerances bound how negative each constraint may read at
    a logged sample before the run aborts with FlaggedViolationError.
    The run stops early once the tracking energy toward the target has
    dropped below stop_v_factor of its initial value, the reference has
    effectively reached the target, and every element is inside half the
    convergence tolerance.
    """

    t_end: float = 30.0 * 86400.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 60.0
    log_period: float = 60.0
    violation_tol_c1: float = 1e-3
    violation_tol_c2: float = 1e-12
    violation_tol_c3: float = 1e-9
    stop_v_factor: float = 1e-10
    converge_rel: float = 1e-3
    converge_angle: float = 1e-3

    def __post_init__(self):
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("integrator tolerances must be positive")
        if self.max_step <= 0.0:
            raise ValueError("max_step must be positive")
        if self.log_period <= 0.0:
            raise ValueError("log_period must be positive")


@dataclass(frozen=True)
class GovernorEvent:
    """One governor instant with its decision diagnostics."""

    t: float
    k: int
    p_index_before: int
    p_index_after: int
    p_des_index: int
    mode_switch_tested: bool
    mode_switched: bool
    candidates_evaluated: int
    steps_accepted: int
    backtracks: int
    delta_final: float
    accepted: bool
    ref_a: float
    ref_e: float
    ref_inc: float
    ref_raan: float
    ref_argp: float


@dataclass
class TrajectoryRecord:
    """Logged closed-loop trajectory plus governor events.

    data holds one row per log sample in SCHEMA_COLUMNS order, with
    strictly increasing time.  Slow elements are logged raw (no angle
    wrapping, so differences against the reference stay meaningful); the
    fast variable is wrapped into [0, 2*pi).
    """

    data: np.ndarray
    events: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    columns: tuple = SCHEMA_COLUMNS

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    def final_elements(self) -> SlowElements:
        return SlowElements.from_array(self.data[-1, 1:6])

    def final_reference(self) -> SlowElements:
        return SlowElements.from_array(self.data[-1, 7:12])

    def min_constraints(self) -> tuple[float, float, float]:
        return (float(self.column("c1").min()),
                float(self.column("c2").min()),
                float(self.column("c3").min()))

    @property
    def delta_v(self) -> float:
        return float(self.data[-1, self.columns.index("dv")])

    def converged_from(self, x_des: SlowElements, rel: float = 1e-3,
                       angle: float = 1e-3) -> float | None:
        """Earliest logged time from which every later sample tracks x_des.

        a and e are compared relative to the target values, the three
        angles within an absolute tolerance in radians.
        """
        des = x_des.as_array()
        ok = np.ones(self.data.shape[0], dtype=bool)
        for j, col in enumerate(("a", "e")):
            ok &= np.abs(self.column(col) - des[j]) <= rel * abs(des[j])
        for j, col in zip((2, 3, 4), ("inc", "raan", "argp")):
            ok &= np.abs(self.column(col) - des[j]) <= angle
        suffix = np.logical_and.accumulate(ok[::-1])[::-1]
        idx = np.argmax(suffix)
        if not suffix[idx]:
            return None
        return float(self.t[idx])


def _elementwise_close(x: np.ndarray, des: np.ndarray, rel: float, angle: float) -> bool:
    if abs(x[0] - des[0]) > rel * abs(des[0]):
        return False
    if abs(x[1] - des[1]) > rel * abs(des[1]):
        return False
    return all(abs(x[j] - des[j]) <= angle for j in (2, 3, 4))


def _segment_rows(t0: float, ts: np.ndarray, ys: np.ndarray, ref: np.ndarray,
                  p_index: int, pmat: np.ndarray, lim: ConstraintLimits,
                  mu: float) -> np.ndarray:
    """Assemble schema rows for samples of one constant-(ref, P) segment."""
    out = _kernels.log_rows(ys, ref, pmat, mu)
    n = ys.shape[0]
    rows = np.empty((n, len(SCHEMA_COLUMNS)))
    rows[:, 0] = t0 + ts
    rows[:, 1:6] = ys[:, :5]
    rows[:, 6] = ys[:, 5] % _TWO_PI
    rows[:, 7:12] = ref
    rows[:, 12] = p_index
    rows[:, 13:17] = out[:, 0:4]            # u_s, u_t, u_w, u_norm
    rows[:, 17] = out[:, 4]                 # lyapunov
    rows[:, 18] = out[:, 6] - lim.r_min     # c1
    rows[:, 19] = lim.u_max ** 2 - out[:, 3] ** 2  # c2
    rows[:, 20] = ys[:, 1] - lim.e_min      # c3
    rows[:, 21] = out[:, 5]                 # r
    rows[:, 22] = out[:, 6]                 # r_p
    rows[:, 23] = ys[:, 6]                  # dv
    return rows


def _check_violations(rows: np.ndarray, scfg: SimConfig) -> None:
    for col, tol, name in ((18, scfg.violation_tol_c1, "c1"),
                           (19, scfg.violation_tol_c2, "c2"),
                           (20, scfg.violation_tol_c3, "c3")):
        bad = rows[:, col] < -tol
        if np.any(bad):
            j = int(np.argmax(bad))
            raise FlaggedViolationError(
                f"constraint {name} = {rows[j, col]:.6e} beyond tolerance "
                f"{tol:.1e} at t = {rows[j, 0]:.1f} s")


def integrate_segment(x: FullState, ref: SlowElements, p: WeightMatrix,
                      dt: float, scfg: SimConfig,
                      const: Constants = Constants()) -> FullState:
    """Advance the coupled six-state system by dt with fixed (ref, P)."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    y0 = np.zeros(7)
    y0[:6] = x.as_array()
    ys = _integrate.propagate(y0, ref.as_array(), p.p, const.mu, dt,
                              np.array([dt]), scfg.rel_tol, scfg.abs_tol,
                              scfg.max_step)
    return FullState.from_array(ys[-1, :6])


def run_closed_loop(x0: FullState, x_des: SlowElements, modes: ModeSet,
                    gcfg: GovernorConfig, scfg: SimConfig,
                    lim: ConstraintLimits,
                    const: Constants = Constants()) -> TrajectoryRecord:
    """Simulate the governed transfer from x0 toward x_des.

    The reference starts at the initial state (which must satisfy the
    boundary margins) and is advanced by the governor every update period.
    Terminates at t_end, or earlier once the convergence stopping rule is
    met; aborts with FlaggedViolationError if any logged sample violates a
    constraint beyond tolerance.
    """
    if not reference_admissible_margin(x0.elements, lim):
        raise InfeasibleStartError(
            "initial state violates the c1/c3 boundary margins; "
            "the initial reference would be inadmissible")

    p_index0 = select_p_des(x0.elements.a, modes)
    state = GovernorState(x_tilde=x0.elements, p_index=p_index0, k=0)
    v0 = lyapunov_value(x0.elements, x_des, modes.matrices[p_index0])
    des_arr = x_des.as_array()

    y = np.zeros(7)
    y[:6] = x0.as_array()
    t = 0.0
    blocks: list[np.ndarray] = []
    events: list[GovernorEvent] = []
    stopped_early = False
    eps = 1e-9

    while t < scfg.t_end - eps:
        t_next = min(t + gcfg.update_period, scfg.t_end)
        final = t_next >= scfg.t_end - eps
        ref = state.x_tilde.as_array()
        pmat = modes.matrices[state.p_index].p

        # global log grid restricted to [t, t_next), plus the endpoint
        j0 = math.ceil((t - eps) / scfg.log_period)
        grid = []
        while j0 * scfg.log_period < t_next - eps:
            if j0 * scfg.log_period >= t - eps:
                grid.append(j0 * scfg.log_period - t)
            j0 += 1
        ts = np.array(grid + [t_next - t])

        ys = _integrate.propagate(y, ref, pmat, const.mu, t_next - t, ts,
                                  scfg.rel_tol, scfg.abs_tol, scfg.max_step)
        n_log = len(ts) if final else len(ts) - 1
        if n_log > 0:
            rows = _segment_rows(t, ts[:n_log], ys[:n_log], ref,
                                 state.p_index, pmat, lim, const.mu)
            _check_violations(rows, scfg)
            blocks.append(rows)
        y = ys[-1]
        t = t_next
        if final:
            break

        x_now = FullState.from_array(y[:6])
        before = state.p_index
        state = governor_step(state, x_now, x_des, modes, gcfg, lim, const)
        d = state.last_decision
        events.append(GovernorEvent(
            t=t, k=d.k, p_index_before=before, p_index_after=state.p_index,
            p_des_index=d.p_des_index, mode_switch_tested=d.mode_switch_tested,
            mode_switched=d.mode_switched,
            candidates_evaluated=d.candidates_evaluated,
            steps_accepted=d.steps_accepted, backtracks=d.backtracks,
            delta_final=d.delta_final, accepted=d.accepted,
            ref_a=state.x_tilde.a, ref_e=state.x_tilde.e,
            ref_inc=state.x_tilde.i, ref_raan=state.x_tilde.raan,
            ref_argp=state.x_tilde.argp,
        ))

        p_act = modes.matrices[state.p_index]
        v_x = lyapunov_value(SlowElements.from_array(y[:5]), x_des, p_act)
        v_ref = lyapunov_value(state.x_tilde, x_des, p_act)
        if (v0 == 0.0 or (v_x <= scfg.stop_v_factor * v0
                          and v_ref <= scfg.stop_v_factor * v0)) \
                and _elementwise_close(y[:5], des_arr,
                                       0.5 * scfg.converge_rel,
                                       0.5 * scfg.converge_angle):
            ref = state.x_tilde.as_array()
            rows = _segment_rows(t, np.array([0.0]), y[None, :], ref,
                                 state.p_index, p_act.p, lim, const.mu)
            _check_violations(rows, scfg)
            blocks.append(rows)
            stopped_early = True
            break

    data = np.vstack(blocks)
    if not np.all(np.diff(data[:, 0]) > 0.0):
        raise RuntimeError("internal error: log times not strictly increasing")
    return TrajectoryRecord(
        data=data,
        events=events,
        meta={
            "t_final": float(data[-1, 0]),
            "t_end_requested": scfg.t_end,
            "stopped_early": stopped_early,
            "v0": v0,
            "n_instants": len(events),
        },
    )
