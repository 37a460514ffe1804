"""Multi-step, multi-mode incremental reference governor.

At every update instant the governor tries to advance the modified
reference toward the target along a scheduled direction (coordinate
descent interlaced with periodic full steps), accepting each increment
only if the chosen admissibility backend certifies it.  A parallel mode
mechanism switches the controller weight matrix to the member of a
calibrated set whose sublevel-set geometry best matches the current
semi-major axis.

Two interchangeable admissibility backends are provided: the sublevel-set
minimization tests from :mod:`orbitgov.admissibility`, and a
prediction-based test that forward-simulates the closed loop over a finite
horizon and adds a terminal certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _integrate, _kernels
from .admissibility import is_admissible
from .constraints import ConstraintLimits, c2 as c2_pointwise, reference_admissible_margin
from .controller import WeightMatrix, lyapunov_value
from .elements import Constants, FullState, SlowElements

__all__ = [
    "GovernorConfig",
    "GovernorState",
    "ModeSet",
    "StepDecision",
    "build_rotated_p",
    "build_rotated_p_set",
    "direction_schedule",
    "governor_step",
    "increment",
    "prediction_admissible",
    "select_p_des",
]

BACKENDS = ("lyapunov-set", "prediction")


@dataclass(frozen=True)
class GovernorConfig:
    """Governor calibration.

    Args:
        delta: nominal step fraction toward the target per increment.
        gamma: step-size backtracking factor in (0, 1).
        n_steps: maximum candidates evaluated per instant.
        update_period: seconds between governor instants.
        backend: "lyapunov-set" or "prediction".
        prediction_horizon: prediction length in seconds; None means ten
            orbital periods at the current semi-major axis.
        prediction_sample: spacing of constraint checks along the predicted
            trajectory (s).
        prediction_rel_tol / prediction_abs_tol: integrator tolerances for
            the prediction backend (looser than the simulation for speed).
        terminal_v_factor: the prediction terminal certificate accepts when
            V at the horizon end has decayed below this fraction of the
            initial V (otherwise the sublevel-set test must pass there).
    """

    delta: float = 0.01
    gamma: float = 0.2
    n_steps: int = 12
    update_period: float = 900.0
    backend: str = "lyapunov-set"
    prediction_horizon: float | None = None
    prediction_sample: float = 60.0
    prediction_rel_tol: float = 1e-8
    prediction_abs_tol: float = 1e-10
    terminal_v_factor: float = 1e-6

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.update_period <= 0.0:
            raise ValueError("update_period must be positive")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.prediction_horizon is not None and self.prediction_horizon <= 0.0:
            raise ValueError("prediction_horizon must be positive")
        if self.prediction_sample <= 0.0:
            raise ValueError("prediction_sample must be positive")


@dataclass(frozen=True)
class ModeSet:
    """Ordered weight matrices with semi-major-axis selection breakpoints.

    matrices[0] serves the highest band; thresholds are strictly decreasing
    and one shorter than the matrix list.  Band j is [thresholds[j],
    thresholds[j-1]), closed on the left.
    """

    matrices: tuple[WeightMatrix, ...]
    thresholds: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "matrices", tuple(self.matrices))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if len(self.matrices) == 0:
            raise ValueError("mode set needs at least one matrix")
        if len(self.thresholds) != len(self.matrices) - 1:
            raise ValueError("need exactly one threshold fewer than matrices")
        if any(t2 >= t1 for t1, t2 in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly decreasing")


@dataclass(frozen=True)
class StepDecision:
    """Diagnostics of a single governor instant."""

    k: int
    p_des_index: int
    mode_switch_tested: bool
    mode_switched: bool
    candidates_evaluated: int
    steps_accepted: int
    backtracks: int
    delta_final: float
    accepted: bool


@dataclass(frozen=True)
class GovernorState:
    """Reference-governor state between instants.

    k counts completed governor instants and drives the direction schedule.
    """

    x_tilde: SlowElements
    p_index: int
    k: int = 0
    last_decision: StepDecision | None = None


def build_rotated_p(p0_diag, a_j: float, r_min: float,
                    base_angle: float = 0.0) -> WeightMatrix:
    """Weight matrix with the (a, e) block tilted along the periapsis boundary.

    The boundary r_p = a(1-e) - r_min = 0 has tangent slope de/da = r_min/a^2,
    so the upper 2x2 block of diag(p0_diag) is rotated by
    base_angle + arctan(r_min / a_j^2); remaining diagonal entries are copied
    unchanged.  base_angle supports the cumulative construction of
    :func:`build_rotated_p_set`.
    """
    p0 = np.asarray(p0_diag, dtype=float)
    if p0.shape != (5,) or np.any(p0 <= 0.0):
        raise ValueError("p0_diag must be five positive scalars")
    if a_j <= 0.0 or r_min <= 0.0:
        raise ValueError("a_j and r_min must be positive")
    alpha = base_angle + math.atan(r_min / (a_j * a_j))
    ca, sa = math.cos(alpha), math.sin(alpha)
    p = np.diag(p0)
    p1, p2 = p0[0], p0[1]
    p[0, 0] = p1 * ca * ca + p2 * sa * sa
    p[0, 1] = p[1, 0] = (p1 - p2) * sa * ca
    p[1, 1] = p1 * sa * sa + p2 * ca * ca
    return WeightMatrix(p)


def build_rotated_p_set(p0_diag, a_list, r_min: float) -> list[WeightMatrix]:
    """Mode-set matrices for an ordered, decreasing list of calibration axes.

    The tilt angle accumulates down the list (each matrix is the previous
    one rotated further by its own boundary angle), which is what the
    reference calibration for the Earth-transfer scenarios uses.
    """
    out = []
    angle = 0.0
    for a_j in a_list:
        out.append(build_rotated_p(p0_diag, a_j, r_min, base_angle=angle))
        angle += math.atan(r_min / (float(a_j) ** 2))
    return out


def select_p_des(a_k: float, modes: ModeSet) -> int:
    """Index of the mode whose band contains a_k (bands closed on the left)."""
    idx = 0
    for t in modes.thresholds:
        if a_k < t:
            idx += 1
    return idx


def direction_schedule(k: int) -> np.ndarray:
    """Direction-selection matrix for governor instant k.

    Cycles through the five element coordinates, then takes a full
    "straight line" step toward the target every sixth instant.
    """
    if k < 0:
        raise ValueError("instant counter must be nonnegative")
    l = k % 6
    if l == 5:
        return np.eye(5)
    e = np.zeros((5, 5))
    e[l, l] = 1.0
    return e


def increment(ref_prev: SlowElements, x_des: SlowElements, delta: float,
              e_mat: np.ndarray) -> SlowElements:
    """One reference increment: prev + delta * E (x_des - prev)."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    prev = ref_prev.as_array()
    step = delta * (e_mat @ (x_des.as_array() - prev))
    return SlowElements.from_array(prev + step)


def _backend(cfg: GovernorConfig):
    """Admissibility test with the uniform (ref, p, x_k) -> bool signature."""
    if cfg.backend == "prediction":
        def test(ref, p, x_k, lim, const):
            return prediction_admissible(ref, p, x_k, cfg, lim, const)
    else:
        def test(ref, p, x_k, lim, const):
            return is_admissible(ref, p, x_k.elements, x_k, lim, const)
    return test


def governor_step(state: GovernorState, x_k: FullState, x_des: SlowElements,
                  modes: ModeSet, cfg: GovernorConfig, lim: ConstraintLimits,
                  const: Constants = Constants()) -> GovernorState:
    """One governor instant: mode selection then incremental reference steps.

    Mode step: if the band-selected matrix differs from the active one and
    the current reference is admissible under it, switch; either way the
    reference search continues with the active matrix.

    Reference step: the first candidate uses the nominal step size; on
    failure the size backtracks once by gamma, and a second failure holds
    the previous reference.  After any acceptance the step size is kept
    until a candidate fails (return the last accepted) or n_steps
    candidates have been evaluated.  Optimizer failures count as
    inadmissible, so every failure path degrades to holding the previous
    reference, which remains feasible.
    """
    admissible = _backend(cfg)
    k = state.k + 1

    p_index = state.p_index
    p_des = select_p_des(x_k.elements.a, modes)
    switch_tested = False
    switched = False
    if p_des != p_index:
        switch_tested = True
        if admissible(state.x_tilde, modes.matrices[p_des], x_k, lim, const):
            p_index = p_des
            switched = True

    p_act = modes.matrices[p_index]
    e_mat = direction_schedule(k)
    delta = cfg.delta
    current = state.x_tilde
    evaluated = 0
    accepted_steps = 0
    backtracks = 0

    while evaluated < cfg.n_steps:
        cand = increment(current, x_des, delta, e_mat)
        if np.array_equal(cand.as_array(), current.as_array()):
            break  # scheduled direction already converged; no progress possible
        evaluated += 1
        if admissible(cand, p_act, x_k, lim, const):
            current = cand
            accepted_steps += 1
        elif accepted_steps == 0 and backtracks == 0:
            backtracks = 1
            delta = cfg.gamma * delta
        else:
            break

    decision = StepDecision(
        k=k,
        p_des_index=p_des,
        mode_switch_tested=switch_tested,
        mode_switched=switched,
        candidates_evaluated=evaluated,
        steps_accepted=accepted_steps,
        backtracks=backtracks,
        delta_final=delta,
        accepted=accepted_steps > 0,
    )
    return GovernorState(x_tilde=current, p_index=p_index, k=k,
                         last_decision=decision)


def _orbital_period(a: float, mu: float) -> float:
    return 2.0 * math.pi * math.sqrt(a ** 3 / mu)


def prediction_admissible(ref: SlowElements, p: WeightMatrix, x_k: FullState,
                          cfg: GovernorConfig, lim: ConstraintLimits,
                          const: Constants = Constants()) -> bool:
    """Prediction-based admissibility: simulate, check samples, certify tail.

    Forward-simulates the closed loop with (ref, p) frozen from x_k,
    checking the periapsis, thrust, and eccentricity constraints every
    prediction_sample seconds (including the start).  Because a finite
    horizon alone proves nothing about the tail, the test additionally
    requires a terminal certificate: either V has collapsed to
    terminal_v_factor of its initial value (the reference is then attained
    up to a negligible ball), or the sublevel-set test passes at the
    horizon end.  Applies the same boundary-margin rule as the
    sublevel-set backend so the two are interchangeable in the governor.
    Integrator failure means inadmissible.
    """
    if not reference_admissible_margin(ref, lim):
        return False
    if c2_pointwise(x_k, ref, p, lim, const) < 0.0:
        return False

    horizon = cfg.prediction_horizon
    if horizon is None:
        horizon = 10.0 * _orbital_period(x_k.elements.a, const.mu)
    n = max(1, int(math.ceil(horizon / cfg.prediction_sample)))
    t_eval = np.linspace(0.0, horizon, n + 1)
    ref_arr = ref.as_array()

    # Integrate in chunks so a violating candidate is rejected without
    # paying for the remaining horizon.  A trajectory sinking below e_min
    # already violates the eccentricity constraint (and heads into the GVE
    # singularity), so the integrator is told to abort there.
    chunk = max(16, n // 8)
    y = np.zeros(7)
    y[:6] = x_k.as_array()
    last = None
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        ts = t_eval[lo:hi + 1] - t_eval[lo]
        try:
            ys = _integrate.propagate(
                y, ref_arr, p.p, const.mu, ts[-1], ts,
                rtol=cfg.prediction_rel_tol, atol=cfg.prediction_abs_tol,
                max_step=np.inf, e_floor=lim.e_min, max_steps=30_000)
        except _integrate.IntegrationError:
            return False
        out = _kernels.log_rows(ys, ref_arr, p.p, const.mu)
        if np.any(out[:, 6] - lim.r_min < 0.0):
            return False
        if np.any(lim.u_max ** 2 - out[:, 3] ** 2 < 0.0):
            return False
        if np.any(ys[:, 1] - lim.e_min < 0.0):
            return False
        y = ys[-1]
        last = ys[-1]

    v0 = lyapunov_value(x_k.elements, ref, p)
    end = SlowElements.from_array(last[:5])
    v_end = lyapunov_value(end, ref, p)
    if v_end <= cfg.terminal_v_factor * v0:
        return True
    x_end = FullState(end, float(last[5]) % (2.0 * math.pi))
    return is_admissible(ref, p, end, x_end, lim, const)
