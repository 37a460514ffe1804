"""Orbital-element to Cartesian conversion, local to this package.

Reimplemented from the standard formulas on purpose: the 3-D figures must
not link against the simulation build, and the recomputed radii are
cross-checked against the CSV's own radius column as a consistency gate.
"""

from __future__ import annotations

import numpy as np

__all__ = ["positions_from_elements"]


def positions_from_elements(a, e, inc, raan, argp, theta):
    """Inertial positions (N, 3) in km from arrays of osculating elements."""
    a = np.asarray(a, dtype=float)
    p = a * (1.0 - np.asarray(e) ** 2)
    r = p / (1.0 + e * np.cos(theta))
    x_pf = r * np.cos(theta)
    y_pf = r * np.sin(theta)

    co, so = np.cos(argp), np.sin(argp)
    ci, si = np.cos(inc), np.sin(inc)
    cO, sO = np.cos(raan), np.sin(raan)

    out = np.empty((a.size, 3))
    out[:, 0] = (cO * co - sO * so * ci) * x_pf + (-cO * so - sO * co * ci) * y_pf
    out[:, 1] = (sO * co + cO * so * ci) * x_pf + (-sO * so + cO * co * ci) * y_pf
    out[:, 2] = (so * si) * x_pf + (co * si) * y_pf
    return out
