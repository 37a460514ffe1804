"""Reference admissibility via constraint minimization over Lyapunov sublevel sets.

A candidate reference ref with weight matrix P is admissible at the state
x_k if the minimum of each constraint over the sublevel set

    Q = { X : V(X, ref, P) <= V(x_k, ref, P) }

is nonnegative: the closed loop can never leave Q while (ref, P) are held,
so nonnegative minima certify constraint satisfaction for all future time.

The minimizations substitute X = ref + L^{-T} z with P = L L^T, which turns
Q into the Euclidean ball ||z||^2 <= 2*level.  Each problem is then solved
by a projected-gradient method with Barzilai-Borwein spectral steps and a
nonmonotone line search, multistarted from deterministic seed points (ball
center, +/- axis points) plus the measured state as warm start.  The thrust
problem carries the true anomaly as an extra unconstrained periodic
variable.  No randomness anywhere: repeated solves are bit-identical.

Iterates whose mapped elements leave the validity region (e near 0 or 1,
a near 0, i near 0 or pi) are pulled back by the line search; this never
changes an admissibility decision because any sublevel set that pokes
below e = 0 already fails the eccentricity test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constraints import ConstraintLimits, c2 as c2_pointwise, reference_admissible_margin
from .controller import WeightMatrix, lyapunov_value
from .elements import Constants, FullState, SlowElements

__all__ = ["SublevelSet", "SolveReport", "c1_star", "c2_star", "c3_star", "is_admissible"]

MAX_ITER = 600          # per start; mirrors the NLP iteration budget of the calibration
GTOL = 1e-10            # projected-gradient tolerance, relative to the initial norm
_ARMIJO = 1e-4
_HIST = 10              # nonmonotone line-search memory
_SEED_SHRINK = 0.9      # axis seeds sit at 0.9 * radius

# validity-region guard, slightly inside the dynamics singularity floors
_A_FLOOR = 1e-6
_E_LO, _E_HI = 1e-8, 1.0 - 1e-8
_I_LO, _I_HI = 1e-8, math.pi - 1e-8


@dataclass(frozen=True)
class SublevelSet:
    """Ellipsoid { X : V(X, center, p) <= level } in element space."""

    center: SlowElements
    p: WeightMatrix
    level: float

    def __post_init__(self):
        if not (self.level >= 0.0 and math.isfinite(self.level)):
            raise ValueError(f"level must be finite and >= 0, got {self.level}")

    @classmethod
    def at_state(cls, ref: SlowElements, p: WeightMatrix,
                 x_k: SlowElements) -> "SublevelSet":
        """Sublevel set through the measured state x_k."""
        return cls(ref, p, lyapunov_value(x_k, ref, p))

    @property
    def radius(self) -> float:
        """Ball radius in whitened coordinates z = L^T (X - center)."""
        return math.sqrt(2.0 * self.level)

    def contains(self, x: SlowElements, tol: float = 1e-9) -> bool:
        return lyapunov_value(x, self.center, self.p) <= self.level * (1.0 + tol) + tol


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one constraint minimization over a sublevel set.

    A non-converged report is never an exception: the governor treats it as
    an inadmissible reference and holds the previous one.
    """

    minimum: float
    argmin: SlowElements
    converged: bool
    iterations: int
    theta: float | None = None


def _valid_rows(X: np.ndarray) -> np.ndarray:
    """Validity of element rows (B, 5) against the guard bounds."""
    return (
        np.isfinite(X).all(axis=1)
        & (X[:, 0] > _A_FLOOR)
        & (X[:, 1] > _E_LO) & (X[:, 1] < _E_HI)
        & (X[:, 2] > _I_LO) & (X[:, 2] < _I_HI)
    )


def _project_ball(V: np.ndarray, radius: float, nball: int) -> np.ndarray:
    """Project the first nball coordinates of each row onto the ball."""
    out = V.copy()
    nrm = np.linalg.norm(out[:, :nball], axis=1)
    over = nrm > radius
    if np.any(over):
        out[over, :nball] *= (radius / nrm[over])[:, None]
    return out


def _spg_minimize(value_and_grad, seeds: np.ndarray, radius: float, nball: int,
                  valid_of: np.ndarray | None = None,
                  smat: np.ndarray | None = None,
                  center: np.ndarray | None = None):
    """Multistart projected spectral-gradient minimization over the ball.

    Args:
        value_and_grad: maps V (B, n) -> (f (B,), g (B, n)).
        seeds: (B, n) start points, inside the ball and valid.
        radius: ball radius for the first nball coordinates.
        nball: number of ball-constrained coordinates (5 here).
        smat, center: map from ball coordinates to elements for the
            validity guard; guard disabled when smat is None.

    Returns:
        (v_best, f_best, converged, iters) per start.
    """
    v = seeds.copy()
    B, n = v.shape
    f, g = value_and_grad(v)
    f_best = f.copy()
    v_best = v.copy()
    hist = np.tile(f[:, None], (1, _HIST))
    iters = np.zeros(B, dtype=np.int64)

    def pg_norm(vv, gg):
        return np.linalg.norm(_project_ball(vv - gg, radius, nball) - vv, axis=1)

    def rows_valid(vv):
        if smat is None:
            return np.isfinite(vv).all(axis=1)
        X = center[None, :] + vv[:, :5] @ smat.T
        return _valid_rows(X) & np.isfinite(vv).all(axis=1)

    pg0 = pg_norm(v, g)
    gtol = GTOL * np.maximum(1.0, pg0)
    converged = pg0 <= gtol
    active = ~converged

    gn = np.linalg.norm(g, axis=1)
    alpha = np.where(gn > 0.0, max(radius, 1e-12) / (gn + 1e-300), 1.0)

    for _ in range(MAX_ITER):
        if not active.any():
            break
        iters[active] += 1

        d = _project_ball(v - alpha[:, None] * g, radius, nball) - v
        m = np.einsum("ij,ij->i", g, d)

        t = np.ones(B)
        accepted = ~active
        cand_v, cand_f, cand_g = v.copy(), f.copy(), g.copy()
        fmax = hist.max(axis=1)
        for _trial in range(45):
            rows = active & ~accepted
            if not rows.any():
                break
            trial_v = v + t[:, None] * d
            tf, tg = value_and_grad(trial_v)
            ok = rows_valid(trial_v) & np.isfinite(tf) & (tf <= fmax + _ARMIJO * t * m)
            upd = rows & ok
            cand_v[upd], cand_f[upd], cand_g[upd] = trial_v[upd], tf[upd], tg[upd]
            accepted |= upd
            shrink = rows & ~ok
            t[shrink] *= 0.5

        stalled = active & ~accepted
        moved = active & accepted

        s = cand_v - v
        yv = cand_g - g
        v, f, g = cand_v, cand_f, cand_g

        better = f < f_best
        f_best[better] = f[better]
        v_best[better] = v[better]

        hist = np.roll(hist, 1, axis=1)
        hist[:, 0] = f

        sy = np.einsum("ij,ij->i", s, yv)
        ss = np.einsum("ij,ij->i", s, s)
        with np.errstate(divide="ignore", invalid="ignore"):
            bb = np.where(sy > 0.0, ss / sy, alpha * 10.0)
        alpha = np.where(moved, np.clip(bb, 1e-16, 1e16), alpha)

        pg = pg_norm(v, g)
        newly = active & (pg <= gtol)
        converged |= newly
        active &= ~(newly | stalled)

    return v_best, f_best, converged, iters


def _whitening(q: SublevelSet):
    """Cholesky whitening: X = center + smat @ z maps the ball to Q."""
    L = q.p.cholesky_lower
    smat = np.linalg.inv(L).T
    return smat, q.center.as_array()


def _seeds_5d(q: SublevelSet, warm: SlowElements | None,
              smat: np.ndarray, center: np.ndarray) -> np.ndarray:
    R = q.radius
    pts = [np.zeros(5)]
    for k in range(5):
        e = np.zeros(5)
        e[k] = _SEED_SHRINK * R
        pts.append(e)
        pts.append(-e)
    if warm is not None:
        L = q.p.cholesky_lower
        zw = L.T @ (warm.as_array() - center)
        nz = np.linalg.norm(zw)
        if nz > R:
            zw = zw * (R / nz)
        pts.append(zw)
    seeds = np.array(pts)
    valid = _valid_rows(center[None, :] + seeds @ smat.T)
    seeds[~valid] = 0.0
    return seeds


def _finish(report_min, v_best, f_best, converged, iters, smat, center,
            theta_idx: int | None = None) -> SolveReport:
    """Package the globally best start; the trust flag follows that start."""
    idx = int(np.argmin(f_best))
    x = center + v_best[idx, :5] @ smat.T
    theta = float(v_best[idx, theta_idx]) % (2.0 * math.pi) if theta_idx is not None else None
    return SolveReport(
        minimum=float(report_min(f_best[idx])),
        argmin=SlowElements.from_array(x),
        converged=bool(converged[idx]),
        iterations=int(iters[idx]),
        theta=theta,
    )


def c1_star(q: SublevelSet, lim: ConstraintLimits,
            warm_start: FullState | None = None) -> SolveReport:
    """Minimum of the periapsis constraint a(1-e) - r_min over Q.

    The objective is bilinear in the elements, so the minimum sits on the
    ellipsoid boundary or at an interior saddle; the multistart covers both
    basins the boundary problem can have.
    """
    if q.level == 0.0:
        el = q.center
        return SolveReport(el.a * (1.0 - el.e) - lim.r_min, el, True, 0)

    smat, center = _whitening(q)
    sa, se = smat[0], smat[1]
    a0, e0 = center[0], center[1]

    def value_and_grad(Z):
        av = a0 + Z @ sa
        ev = e0 + Z @ se
        f = av * (1.0 - ev) - lim.r_min
        g = np.outer(1.0 - ev, sa) - np.outer(av, se)
        return f, g

    warm = warm_start.elements if warm_start is not None else None
    seeds = _seeds_5d(q, warm, smat, center)
    v_best, f_best, conv, iters = _spg_minimize(
        value_and_grad, seeds, q.radius, 5, smat=smat, center=center)
    return _finish(lambda f: f, v_best, f_best, conv, iters, smat, center)


def c3_star(q: SublevelSet, lim: ConstraintLimits,
            warm_start: FullState | None = None) -> SolveReport:
    """Minimum of the eccentricity constraint e - e_min over Q.

    Linear objective: the exact answer is
    e_center - e_min - sqrt(2 * level * (P^-1)_ee), which the numeric solve
    must reproduce (the closed form stays in the tests as the oracle).
    """
    if q.level == 0.0:
        return SolveReport(q.center.e - lim.e_min, q.center, True, 0)

    smat, center = _whitening(q)
    se = smat[1]
    e0 = center[1]

    def value_and_grad(Z):
        f = e0 + Z @ se - lim.e_min
        g = np.broadcast_to(se, Z.shape).copy()
        return f, g

    warm = warm_start.elements if warm_start is not None else None
    seeds = _seeds_5d(q, warm, smat, center)
    v_best, f_best, conv, iters = _spg_minimize(
        value_and_grad, seeds, q.radius, 5, smat=smat, center=center)
    return _finish(lambda f: f, v_best, f_best, conv, iters, smat, center)


def c2_star(q: SublevelSet, lim: ConstraintLimits, c: Constants = Constants(),
            warm_start: FullState | None = None) -> SolveReport:
    """Minimum of u_max^2 - ||U||^2 jointly over X in Q and theta in [0, 2pi).

    The fast variable is a genuine decision variable: we minimize -||U||^2
    over the 6-dimensional (z, theta) domain and report
    u_max^2 - max ||U||^2.
    """
    theta_warm = warm_start.theta if warm_start is not None else 0.0
    if q.level == 0.0:
        # control is identically zero at X = center, for every theta
        return SolveReport(lim.u_max ** 2, q.center, True, 0, theta=theta_warm)

    smat, center = _whitening(q)
    pmat = q.p.p
    mu = c.mu

    def value_and_grad(V):
        Z = np.ascontiguousarray(V[:, :5])
        th = np.ascontiguousarray(V[:, 5])
        J, gZ, gT = _kernels.thrust_sq_and_grad_batch(Z, th, center, smat, pmat, mu)
        g = np.empty_like(V)
        g[:, :5] = -gZ
        g[:, 5] = -gT
        return -J, g

    R = q.radius
    # The objective is quadratic in z, so the ball center is a stationary
    # point with J = 0: seeds must sit on the axes, fanned over the
    # periodic variable to cover the anomaly's multimodality.
    pts = []
    for k in range(5):
        for j in range(4):
            th = theta_warm + j * math.pi / 2.0
            e = np.zeros(6)
            e[5] = th
            e[k] = _SEED_SHRINK * R
            pts.append(e.copy())
            e[k] = -_SEED_SHRINK * R
            pts.append(e.copy())
    if warm_start is not None:
        L = q.p.cholesky_lower
        zw = L.T @ (warm_start.elements.as_array() - center)
        nz = np.linalg.norm(zw)
        if nz > R:
            zw = zw * (R / nz)
        pts.append(np.concatenate([zw, [theta_warm]]))
        pts.append(np.concatenate([zw, [theta_warm + math.pi]]))
    seeds = np.array(pts)
    valid = _valid_rows(center[None, :] + seeds[:, :5] @ smat.T)
    seeds[~valid, :5] = 0.0

    v_best, f_best, conv, iters = _spg_minimize(
        value_and_grad, seeds, R, 5, smat=smat, center=center)
    return _finish(lambda f: lim.u_max ** 2 + f, v_best, f_best, conv, iters,
                   smat, center, theta_idx=5)


def is_admissible(ref: SlowElements, p: WeightMatrix, x_k: SlowElements,
                  x_full: FullState, lim: ConstraintLimits,
                  c: Constants = Constants()) -> bool:
    """Full admissibility decision for a candidate (ref, P) at state x_k.

    True iff the reference clears the boundary margins, the instantaneous
    thrust bound holds at x_k, and all three sublevel-set minimizations
    converge to nonnegative minima.  Solver failures map to False, never to
    an exception.
    """
    if not reference_admissible_margin(ref, lim):
        return False
    if c2_pointwise(x_full, ref, p, lim, c) < 0.0:
        return False

    q = SublevelSet.at_state(ref, p, x_k)

    r3 = c3_star(q, lim, warm_start=x_full)
    if not r3.converged or r3.minimum < 0.0:
        return False
    r1 = c1_star(q, lim, warm_start=x_full)
    if not r1.converged or r1.minimum < 0.0:
        return False
    r2 = c2_star(q, lim, c, warm_start=x_full)
    if not r2.converged or r2.minimum < 0.0:
        return False
    return True
