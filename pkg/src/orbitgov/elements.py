"""Orbital element state types, Gauss variational equations, and geometry.

Works in classical elements X = (a, e, i, raan, argp) with the true anomaly
theta as the fast variable.  Thrust acceleration is expressed in the
radial / transverse / orbit-normal (S, T, W) frame.  Units are km, s, rad
throughout; no unit conversion happens inside the numerics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = [
    "EARTH_MU",
    "ECC_FLOOR",
    "INC_FLOOR",
    "Constants",
    "SlowElements",
    "FullState",
    "ThrustAccel",
    "SingularElementsError",
    "gve_matrix",
    "theta_rate",
    "periapsis_radius",
    "radius",
    "elements_to_cartesian",
    "cartesian_to_elements",
]

# Standard gravitational parameter of Earth, km^3/s^2.
EARTH_MU = 3.986004418e5

# Hard singularity floors for the dynamics.  The governor-level eccentricity
# constraint keeps the closed loop far above these in practice.
ECC_FLOOR = 1e-9
INC_FLOOR = 1e-9

_TWO_PI = 2.0 * math.pi


class SingularElementsError(ValueError):
    """Raised when elements are too close to a GVE singularity."""


@dataclass(frozen=True)
class Constants:
    """Physical constants of the primary body.

    Args:
        mu: gravitational parameter (km^3/s^2).
    """

    mu: float = EARTH_MU

    def __post_init__(self):
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be positive and finite, got {self.mu}")


@dataclass(frozen=True)
class SlowElements:
    """The five controlled orbital elements of the osculating orbit.

    Angles are stored as given (no wrapping): the tracking error against a
    reference must stay continuous, so normalization is applied only at
    output boundaries via :meth:`normalized`.

    Args:
        a: semi-major axis (km), > 0.
        e: eccentricity, in [0, 1) (elliptic regime only).
        i: inclination (rad), in [0, pi].
        raan: right ascension of the ascending node (rad).
        argp: argument of periapsis (rad).
    """

    a: float
    e: float
    i: float
    raan: float
    argp: float

    def __post_init__(self):
        vals = (self.a, self.e, self.i, self.raan, self.argp)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"elements must be finite, got {vals}")
        if self.a <= 0.0:
            raise ValueError(f"semi-major axis must be positive, got {self.a}")
        if not (0.0 <= self.e < 1.0):
            raise ValueError(f"eccentricity must be in [0, 1), got {self.e}")
        if not (0.0 <= self.i <= math.pi):
            raise ValueError(f"inclination must be in [0, pi], got {self.i}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.e, self.i, self.raan, self.argp])

    @classmethod
    def from_array(cls, x) -> "SlowElements":
        a, e, i, raan, argp = (float(v) for v in x)
        return cls(a, e, i, raan, argp)

    def normalized(self) -> "SlowElements":
        """Copy with raan and argp wrapped into [0, 2*pi)."""
        return SlowElements(self.a, self.e, self.i,
                            self.raan % _TWO_PI, self.argp % _TWO_PI)


@dataclass(frozen=True)
class FullState:
    """Slow elements plus the fast variable (true anomaly).

    theta is wrapped into [0, 2*pi) at construction.
    """

    elements: SlowElements
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta}")
        object.__setattr__(self, "theta", self.theta % _TWO_PI)

    def as_array(self) -> np.ndarray:
        out = np.empty(6)
        out[:5] = self.elements.as_array()
        out[5] = self.theta
        return out

    @classmethod
    def from_array(cls, y) -> "FullState":
        return cls(SlowElements.from_array(y[:5]), float(y[5]))


@dataclass(frozen=True)
class ThrustAccel:
    """Thrust acceleration components in the (S, T, W) frame, km/s^2.

    S is radial (outward), T transverse (along-track, in-plane), W normal
    (along the angular momentum vector).
    """

    s: float
    t: float
    w: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.s, self.t, self.w)):
            raise ValueError("thrust components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.t, self.w])

    @property
    def norm(self) -> float:
        return math.sqrt(self.s * self.s + self.t * self.t + self.w * self.w)


def _check_nonsingular(e: float, i: float) -> None:
    if e < ECC_FLOOR:
        raise SingularElementsError(
            f"eccentricity {e} below singularity floor {ECC_FLOOR}")
    if i < INC_FLOOR or i > math.pi - INC_FLOOR:
        raise SingularElementsError(
            f"inclination {i} within {INC_FLOOR} of 0 or pi")


def gve_matrix(x: FullState, c: Constants = Constants()) -> np.ndarray:
    """Input matrix G(X, theta) of the elliptic Gauss variational equations.

    The slow elements evolve as dX/dt = G(X, theta) @ [S, T, W]; there is no
    drift term, so the elements are constant under zero thrust.

    Returns:
        (5, 3) array; rows ordered (a, e, i, raan, argp), columns (S, T, W).

    Raises:
        SingularElementsError: e below ECC_FLOOR, or i within INC_FLOOR of
            0 or pi (the raan/argp rows become singular there).
    """
    el = x.elements
    _check_nonsingular(el.e, el.i)
    return _kernels.gve(x.as_array(), c.mu)


def theta_rate(x: FullState, u: ThrustAccel, c: Constants = Constants()) -> float:
    """Rate of the true anomaly, d(theta)/dt in rad/s.

    Equals the two-body value h/r^2 plus a thrust correction that cancels
    the perturbation-induced rotation of the (argp, raan) reference
    direction; with u = 0 the rate is exactly Keplerian.
    """
    el = x.elements
    _check_nonsingular(el.e, el.i)
    return float(_kernels.theta_rate(x.as_array(), u.as_array(), c.mu))


def periapsis_radius(x: SlowElements) -> float:
    """Periapsis radius r_p = a*(1 - e) of the osculating orbit, km."""
    return x.a * (1.0 - x.e)


def radius(x: FullState) -> float:
    """Instantaneous distance to the primary, r = a(1-e^2)/(1+e*cos(theta))."""
    el = x.elements
    p = el.a * (1.0 - el.e * el.e)
    return p / (1.0 + el.e * math.cos(x.theta))


def elements_to_cartesian(x: FullState,
                          c: Constants = Constants()) -> tuple[np.ndarray, np.ndarray]:
    """Osculating elements to inertial Cartesian position/velocity (km, km/s).

    Raises:
        SingularElementsError: same floors as :func:`gve_matrix` (the inverse
            conversion is undefined in the singular limits).
    """
    el = x.elements
    _check_nonsingular(el.e, el.i)
    p = el.a * (1.0 - el.e ** 2)
    h = math.sqrt(c.mu * p)
    ct, st = math.cos(x.theta), math.sin(x.theta)
    r = p / (1.0 + el.e * ct)

    pos_pqw = np.array([r * ct, r * st, 0.0])
    vel_pqw = (c.mu / h) * np.array([-st, el.e + ct, 0.0])

    cO, sO = math.cos(el.raan), math.sin(el.raan)
    co, so = math.cos(el.argp), math.sin(el.argp)
    ci, si = math.cos(el.i), math.sin(el.i)
    rot = np.array([
        [cO * co - sO * so * ci, -cO * so - sO * co * ci, sO * si],
        [sO * co + cO * so * ci, -sO * so + cO * co * ci, -cO * si],
        [so * si, co * si, ci],
    ])
    return rot @ pos_pqw, rot @ vel_pqw


def cartesian_to_elements(pos, vel, c: Constants = Constants()) -> FullState:
    """Inverse of :func:`elements_to_cartesian` for elliptic, inclined orbits."""
    r_vec = np.asarray(pos, dtype=float)
    v_vec = np.asarray(vel, dtype=float)
    r = float(np.linalg.norm(r_vec))
    v2 = float(v_vec @ v_vec)

    h_vec = np.cross(r_vec, v_vec)
    h = float(np.linalg.norm(h_vec))
    n_vec = np.array([-h_vec[1], h_vec[0], 0.0])  # z-hat x h
    n = float(np.linalg.norm(n_vec))

    e_vec = ((v2 - c.mu / r) * r_vec - float(r_vec @ v_vec) * v_vec) / c.mu
    e = float(np.linalg.norm(e_vec))

    energy = 0.5 * v2 - c.mu / r
    if energy >= 0.0:
        raise SingularElementsError("state is not elliptic (energy >= 0)")
    a = -c.mu / (2.0 * energy)

    i = math.acos(max(-1.0, min(1.0, h_vec[2] / h)))
    _check_nonsingular(e, i)
    if n < 1e-15 * h:
        raise SingularElementsError("ascending node undefined")

    raan = math.atan2(n_vec[1], n_vec[0]) % _TWO_PI
    cos_argp = float(n_vec @ e_vec) / (n * e)
    argp = math.acos(max(-1.0, min(1.0, cos_argp)))
    if e_vec[2] < 0.0:
        argp = _TWO_PI - argp
    cos_nu = float(e_vec @ r_vec) / (e * r)
    nu = math.acos(max(-1.0, min(1.0, cos_nu)))
    if float(r_vec @ v_vec) < 0.0:
        nu = _TWO_PI - nu

    return FullState(SlowElements(a, e, i, raan, argp), nu)
