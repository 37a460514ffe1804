"""Lyapunov tracking controller on the slow orbital elements.

The quadratic tracking energy V = (1/2) (X - ref)^T P (X - ref) decreases
along closed-loop trajectories under the thrust law U = -G^T P (X - ref):
its derivative is exactly -||U||^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .elements import Constants, FullState, SlowElements, ThrustAccel, gve_matrix

__all__ = ["WeightMatrix", "lyapunov_value", "control"]


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric positive-definite 5x5 weight on the element tracking error.

    Symmetry and positive-definiteness are checked eagerly at construction
    so that a malformed configuration matrix fails before a long run, not
    during one.
    """

    p: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (5, 5):
            raise ValueError(f"weight matrix must be 5x5, got {p.shape}")
        scale = np.linalg.norm(p)
        if np.linalg.norm(p - p.T) > 1e-12 * scale:
            raise ValueError("weight matrix is not symmetric")
        p = 0.5 * (p + p.T)
        eigvals = np.linalg.eigvalsh(p)
        if eigvals[0] <= 0.0:
            raise ValueError(
                f"weight matrix is not positive definite (min eig {eigvals[0]})")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        chol = np.linalg.cholesky(p)
        chol.setflags(write=False)
        object.__setattr__(self, "_chol", chol)

    @property
    def cholesky_lower(self) -> np.ndarray:
        """Lower-triangular L with p = L @ L.T."""
        return self._chol

    def __eq__(self, other):
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return np.array_equal(self.p, other.p)


def lyapunov_value(x: SlowElements, ref: SlowElements, p: WeightMatrix) -> float:
    """Tracking energy V(X, ref, P) = (1/2) (X-ref)^T P (X-ref); >= 0."""
    d = x.as_array() - ref.as_array()
    return 0.5 * float(d @ (p.p @ d))


def control(x: FullState, ref: SlowElements, p: WeightMatrix,
            c: Constants = Constants()) -> ThrustAccel:
    """Thrust acceleration U = -G(X, theta)^T P (X - ref), km/s^2.

    The law is returned unclipped: the thrust-magnitude bound is enforced
    by the reference governor, never by saturating here.

    Raises:
        SingularElementsError: propagated from the GVE matrix evaluation.
    """
    G = gve_matrix(x, c)
    d = x.elements.as_array() - ref.as_array()
    u = -(G.T @ (p.p @ d))
    return ThrustAccel(float(u[0]), float(u[1]), float(u[2]))
