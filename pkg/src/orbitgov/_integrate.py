"""Adaptive integration of the closed-loop element dynamics.

Thin wrapper around the compiled Dormand-Prince 5(4) stepper.  Steps stop
exactly on the requested sample times, so returned rows are integration
points rather than interpolants.  Deterministic for fixed inputs and
tolerances.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

__all__ = ["IntegrationError", "propagate"]


class IntegrationError(RuntimeError):
    """Integrator step failure (for example step-size underflow)."""


def propagate(y0: np.ndarray, ref: np.ndarray, pmat: np.ndarray, mu: float,
              t_end: float, t_eval: np.ndarray, rtol: float, atol: float,
              max_step: float, e_floor: float = 1e-9,
              max_steps: int = 50_000_000) -> np.ndarray:
    """Integrate y' = f(y) with frozen (ref, P) from t = 0 to t_end.

    Args:
        y0: initial (a, e, i, raan, argp, theta, dv) state.
        t_eval: sample times within [0, t_end], ascending.
        e_floor: abort (as IntegrationError) if the eccentricity drops
            below this value; see the stepper for the rationale.

    Returns:
        States at t_eval, shape (len(t_eval), 7).

    Raises:
        IntegrationError: on solver failure, with the failure context.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size == 0 or t_eval[0] != 0.0:
        samples = np.concatenate([[0.0], t_eval])
        skip_first = True
    else:
        samples = t_eval
        skip_first = False
    if samples[-1] < t_end:
        samples = np.concatenate([samples, [float(t_end)]])
        drop_last = True
    else:
        drop_last = False
    try:
        ys = _kernels.dopri45(
            np.asarray(y0, dtype=float), np.asarray(ref, dtype=float),
            np.asarray(pmat, dtype=float), mu, samples, rtol, atol,
            float(max_step), e_floor, max_steps)
    except ValueError as exc:
        raise IntegrationError(f"integration failed: {exc}") from exc
    if drop_last:
        ys = ys[:-1]
    if skip_first:
        ys = ys[1:]
    return ys
