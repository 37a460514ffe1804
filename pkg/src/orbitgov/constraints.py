"""Pointwise maneuver constraints and the boundary-margin rule.

All three constraints are signed: a nonnegative value means satisfied, and
the magnitude is the margin.  Signed values (rather than booleans) let the
admissibility optimizer and the tests inspect how close the loop runs to
each boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

from .controller import WeightMatrix, control
from .elements import Constants, FullState, SlowElements, periapsis_radius

__all__ = ["ConstraintLimits", "c1", "c2", "c3", "reference_admissible_margin"]


@dataclass(frozen=True)
class ConstraintLimits:
    """Constraint limits and reference-margin widths.

    Args:
        r_min: minimum periapsis radius (km).
        u_max: maximum thrust-acceleration magnitude (km/s^2).
        e_min: minimum eccentricity.
        eps_r: margin (km) below which a reference is too close to the
            periapsis boundary to be accepted.
        eps_e: margin below which a reference is too close to the
            eccentricity boundary.  Separate margins per constraint because
            a single number cannot be meaningful in both km and
            dimensionless eccentricity.
    """

    r_min: float
    u_max: float
    e_min: float = 1e-6
    eps_r: float = 1.0
    eps_e: float = 1e-4

    def __post_init__(self):
        if self.r_min <= 0.0:
            raise ValueError(f"r_min must be positive, got {self.r_min}")
        if self.u_max <= 0.0:
            raise ValueError(f"u_max must be positive, got {self.u_max}")
        if self.e_min < 0.0:
            raise ValueError(f"e_min must be nonnegative, got {self.e_min}")
        if self.eps_r <= 0.0 or self.eps_e <= 0.0:
            raise ValueError("margins must be positive")


def c1(x: SlowElements, lim: ConstraintLimits) -> float:
    """Periapsis-radius margin a(1-e) - r_min (km).

    Imposed on the osculating orbit, so a nonnegative value also certifies
    that the spacecraft stays above r_min under total thrust failure.
    """
    return periapsis_radius(x) - lim.r_min


def c2(x: FullState, ref: SlowElements, p: WeightMatrix, lim: ConstraintLimits,
       c: Constants = Constants()) -> float:
    """Thrust-magnitude margin u_max^2 - ||U||^2 (km^2/s^4)."""
    u = control(x, ref, p, c)
    return lim.u_max ** 2 - (u.s ** 2 + u.t ** 2 + u.w ** 2)


def c3(x: SlowElements, lim: ConstraintLimits) -> float:
    """Eccentricity margin e - e_min (keeps the GVEs away from e = 0)."""
    return x.e - lim.e_min


def reference_admissible_margin(ref: SlowElements, lim: ConstraintLimits) -> bool:
    """True iff the reference sits at least one margin inside c1 and c3.

    References closer than (eps_r, eps_e) to the constraint boundary are
    declared inadmissible outright, which keeps the coordinate-descent
    governor steps from pinning the reference onto the boundary.
    """
    return c1(ref, lim) >= lim.eps_r and c3(ref, lim) >= lim.eps_e
