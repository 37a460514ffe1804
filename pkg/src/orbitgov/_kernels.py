"""Compiled numerical kernels for the dynamics and the admissibility solves.

Everything here operates on raw float64 arrays with the element ordering
(a, e, i, raan, argp[, theta]).  The public, validated API lives in the
sibling modules; these kernels assume inputs already respect the
singularity floors.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def gve(y, mu):
    """GVE input matrix G for state y = (a, e, i, raan, argp, theta, ...).

    Rows (a, e, i, raan, argp) x columns (S, T, W).
    """
    a, e, inc, argp, theta = y[0], y[1], y[2], y[4], y[5]
    ce = np.cos(theta)
    se = np.sin(theta)
    kap = 1.0 + e * ce
    p = a * (1.0 - e * e)
    h = np.sqrt(mu * p)
    r = p / kap
    u_lat = theta + argp
    su = np.sin(u_lat)
    cu = np.cos(u_lat)
    si = np.sin(inc)
    ci = np.cos(inc)

    G = np.zeros((5, 3))
    G[0, 0] = 2.0 * a * a * e * se / h
    G[0, 1] = 2.0 * a * a * kap / h
    G[1, 0] = p * se / h
    G[1, 1] = ((p + r) * ce + r * e) / h
    G[2, 2] = r * cu / h
    G[3, 2] = r * su / (h * si)
    G[4, 0] = -p * ce / (h * e)
    G[4, 1] = (p + r) * se / (h * e)
    G[4, 2] = -r * su * ci / (h * si)
    return G


@njit(cache=True)
def gve_and_partials(y, mu):
    """G together with its partial derivatives dG.

    Returns:
        G: (5, 3)
        dG: (5, 3, 6), last axis ordered (a, e, i, raan, argp, theta).
            The raan slice is identically zero.
    """
    a, e, inc, argp, theta = y[0], y[1], y[2], y[4], y[5]
    ce = np.cos(theta)
    se = np.sin(theta)
    kap = 1.0 + e * ce
    ome2 = 1.0 - e * e
    p = a * ome2
    h = np.sqrt(mu * p)
    r = p / kap
    u_lat = theta + argp
    su = np.sin(u_lat)
    cu = np.cos(u_lat)
    si = np.sin(inc)
    ci = np.cos(inc)

    # intermediates' partials
    r_e = -2.0 * a * e / kap - r * ce / kap
    r_th = r * e * se / kap
    aop = a * e / p  # = -h_e/h * (1/e) ... appears as the +G*a*e/p term

    G = np.zeros((5, 3))
    dG = np.zeros((5, 3, 6))

    # row a ------------------------------------------------------------
    g00 = 2.0 * a * a * e * se / h
    g01 = 2.0 * a * a * kap / h
    G[0, 0] = g00
    G[0, 1] = g01
    dG[0, 0, 0] = 3.0 * a * e * se / h
    dG[0, 0, 1] = 2.0 * a * a * se / (h * ome2)
    dG[0, 0, 5] = 2.0 * a * a * e * ce / h
    dG[0, 1, 0] = 3.0 * a * kap / h
    dG[0, 1, 1] = (2.0 * a * a / h) * (ce + kap * e / ome2)
    dG[0, 1, 5] = -2.0 * a * a * e * se / h

    # row e ------------------------------------------------------------
    g10 = p * se / h
    n11 = (p + r) * ce + r * e
    g11 = n11 / h
    G[1, 0] = g10
    G[1, 1] = g11
    dG[1, 0, 0] = g10 / (2.0 * a)
    dG[1, 0, 1] = -a * e * se / h
    dG[1, 0, 5] = p * ce / h
    n11_e = (-2.0 * a * e + r_e) * ce + r_e * e + r
    n11_th = -(p + r) * se + r_th * (ce + e)
    dG[1, 1, 0] = g11 / (2.0 * a)
    dG[1, 1, 1] = n11_e / h + g11 * aop
    dG[1, 1, 5] = n11_th / h

    # row i ------------------------------------------------------------
    g22 = r * cu / h
    G[2, 2] = g22
    dG[2, 2, 0] = g22 / (2.0 * a)
    dG[2, 2, 1] = r_e * cu / h + g22 * aop
    dG[2, 2, 4] = -r * su / h
    dG[2, 2, 5] = (r_th * cu - r * su) / h

    # row raan ---------------------------------------------------------
    g32 = r * su / (h * si)
    G[3, 2] = g32
    dG[3, 2, 0] = g32 / (2.0 * a)
    dG[3, 2, 1] = r_e * su / (h * si) + g32 * aop
    dG[3, 2, 2] = -g32 * ci / si
    dG[3, 2, 4] = r * cu / (h * si)
    dG[3, 2, 5] = (r_th * su + r * cu) / (h * si)

    # row argp ---------------------------------------------------------
    g40 = -p * ce / (h * e)
    n41 = (p + r) * se
    g41 = n41 / (h * e)
    g42 = -g32 * ci
    G[4, 0] = g40
    G[4, 1] = g41
    G[4, 2] = g42
    dG[4, 0, 0] = g40 / (2.0 * a)
    dG[4, 0, 1] = a * ce / h + h * ce / (mu * e * e)
    dG[4, 0, 5] = p * se / (h * e)
    n41_e = (-2.0 * a * e + r_e) * se
    n41_th = (p + r) * ce + r_th * se
    dG[4, 1, 0] = g41 / (2.0 * a)
    dG[4, 1, 1] = n41_e / (h * e) + g41 * aop - g41 / e
    dG[4, 1, 5] = n41_th / (h * e)
    dG[4, 2, 0] = g42 / (2.0 * a)
    dG[4, 2, 1] = -ci * (r_e * su / (h * si) + g32 * aop)
    dG[4, 2, 2] = r * su / (h * si * si)
    dG[4, 2, 4] = -r * cu * ci / (h * si)
    dG[4, 2, 5] = -ci * (r_th * su + r * cu) / (h * si)

    return G, dG


@njit(cache=True)
def theta_rate(y, u, mu):
    """d(theta)/dt for state y and (S, T, W) thrust acceleration u."""
    a, e, theta = y[0], y[1], y[5]
    ce = np.cos(theta)
    se = np.sin(theta)
    kap = 1.0 + e * ce
    p = a * (1.0 - e * e)
    h = np.sqrt(mu * p)
    r = p / kap
    return h / (r * r) + (p * ce * u[0] - (p + r) * se * u[1]) / (h * e)


@njit(cache=True)
def control_accel(y, ref, pmat, mu):
    """Lyapunov tracking law U = -G(X, theta)^T P (X - ref), shape (3,)."""
    G = gve(y, mu)
    d = y[:5] - ref
    return -(G.T @ (pmat @ d))


@njit(cache=True)
def closed_loop_rhs(t, y, ref, pmat, mu):
    """RHS of the closed loop: y = (a, e, i, raan, argp, theta, dv).

    dv accumulates the thrust-acceleration magnitude so that its end value
    is the delta-v integral of the segment.
    """
    a, e = y[0], y[1]
    if e < 1e-12 or e >= 1.0 or a <= 0.0:
        raise ValueError("singular orbital elements reached in dynamics")
    G = gve(y, mu)
    d = y[:5] - ref
    u = -(G.T @ (pmat @ d))
    dy = np.empty(7)
    dy[:5] = G @ u
    theta = y[5]
    ce = np.cos(theta)
    se = np.sin(theta)
    kap = 1.0 + e * ce
    p = a * (1.0 - e * e)
    h = np.sqrt(mu * p)
    r = p / kap
    dy[5] = h / (r * r) + (p * ce * u[0] - (p + r) * se * u[1]) / (h * e)
    dy[6] = np.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
    return dy


@njit(cache=True)
def dopri45(y0, ref, pmat, mu, t_samples, rtol, atol, max_step, e_floor,
            max_steps):
    """Dormand-Prince 5(4) integration of the closed loop with frozen (ref, P).

    Steps never cross a sample time, so every returned row is an actual
    integration point (no dense-output interpolation).  Standard embedded
    error control: RMS of the 4th/5th-order difference against
    atol + rtol*|y|, step factor 0.9*err^(-1/5) clipped to [0.2, 10].

    Args:
        t_samples: ascending, t_samples[0] == 0 is the initial time.
        e_floor: abort once the eccentricity falls below this value; the
            GVEs are singular at e = 0 and trajectories heading there force
            the step size to collapse, so callers that already know such a
            trajectory is unacceptable pass their eccentricity limit here.
        max_steps: abort after this many attempted steps (cost cap for
            near-singular trajectories; callers treat it as a failure).

    Returns:
        States at the sample times, shape (len(t_samples), len(y0)).

    Raises:
        ValueError: eccentricity floor reached, step-size underflow, or
            step-count overflow.
    """
    n = y0.size
    m = len(t_samples)
    ys = np.empty((m, n))
    ys[0] = y0
    t_end = t_samples[m - 1]
    if t_end == 0.0:
        return ys

    y = y0.copy()
    t = 0.0
    k1 = closed_loop_rhs(t, y, ref, pmat, mu)

    # initial step heuristic (matches the usual embedded-RK selection)
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((k1 / scale) ** 2))
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, max_step, t_end)

    idx = 1
    t_next = t_samples[1]
    err_exp = -0.2
    steps = 0
    while idx < m:
        if steps > max_steps:
            raise ValueError("integration exceeded the step budget")
        steps += 1
        h_try = min(h, max_step, t_next - t)
        if h_try <= 1e-12 * max(1.0, abs(t)):
            raise ValueError("step size underflow in dopri45")

        k2 = closed_loop_rhs(t + 0.2 * h_try,
                             y + h_try * 0.2 * k1, ref, pmat, mu)
        k3 = closed_loop_rhs(t + 0.3 * h_try,
                             y + h_try * (0.075 * k1 + 0.225 * k2),
                             ref, pmat, mu)
        k4 = closed_loop_rhs(t + 0.8 * h_try,
                             y + h_try * ((44.0 / 45.0) * k1
                                          - (56.0 / 15.0) * k2
                                          + (32.0 / 9.0) * k3),
                             ref, pmat, mu)
        k5 = closed_loop_rhs(t + (8.0 / 9.0) * h_try,
                             y + h_try * ((19372.0 / 6561.0) * k1
                                          - (25360.0 / 2187.0) * k2
                                          + (64448.0 / 6561.0) * k3
                                          - (212.0 / 729.0) * k4),
                             ref, pmat, mu)
        k6 = closed_loop_rhs(t + h_try,
                             y + h_try * ((9017.0 / 3168.0) * k1
                                          - (355.0 / 33.0) * k2
                                          + (46732.0 / 5247.0) * k3
                                          + (49.0 / 176.0) * k4
                                          - (5103.0 / 18656.0) * k5),
                             ref, pmat, mu)
        y_new = y + h_try * ((35.0 / 384.0) * k1
                             + (500.0 / 1113.0) * k3
                             + (125.0 / 192.0) * k4
                             - (2187.0 / 6784.0) * k5
                             + (11.0 / 84.0) * k6)
        k7 = closed_loop_rhs(t + h_try, y_new, ref, pmat, mu)

        err_vec = h_try * ((71.0 / 57600.0) * k1
                           - (71.0 / 16695.0) * k3
                           + (71.0 / 1920.0) * k4
                           - (17253.0 / 339200.0) * k5
                           + (22.0 / 525.0) * k6
                           - (1.0 / 40.0) * k7)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / sc) ** 2))

        if err <= 1.0:
            t = t + h_try
            y = y_new
            if y[1] < e_floor:
                raise ValueError("eccentricity fell below the floor")
            k1 = k7  # first-same-as-last
            if err == 0.0:
                factor = 10.0
            else:
                factor = min(10.0, max(0.2, 0.9 * err ** err_exp))
            if h_try >= h * (1.0 - 1e-12):
                h = min(max(h_try * factor, 1e-12), 1e12)
            else:
                # sample-boundary clip must not shrink the step memory
                h = min(max(h_try * factor, h), 1e12)
            if t >= t_next - 1e-9 * max(1.0, abs(t_next)):
                ys[idx] = y
                idx += 1
                if idx < m:
                    t_next = t_samples[idx]
        else:
            factor = max(0.2, min(1.0, 0.9 * err ** err_exp))
            h = max(h_try * factor, 1e-12)
    return ys


@njit(cache=True)
def log_rows(ys, ref, pmat, mu):
    """Per-sample outputs along a trajectory with frozen (ref, P).

    Args:
        ys: (N, >=6) states (a, e, i, raan, argp, theta[, dv]).

    Returns:
        (N, 7) array with columns
        (u_s, u_t, u_w, u_norm, lyapunov, r, r_p).
    """
    N = ys.shape[0]
    out = np.empty((N, 7))
    for j in range(N):
        y = ys[j]
        G = gve(y, mu)
        d = y[:5] - ref
        u = -(G.T @ (pmat @ d))
        out[j, 0] = u[0]
        out[j, 1] = u[1]
        out[j, 2] = u[2]
        out[j, 3] = np.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
        out[j, 4] = 0.5 * (d @ (pmat @ d))
        a, e, theta = y[0], y[1], y[5]
        r = a * (1.0 - e * e) / (1.0 + e * np.cos(theta))
        out[j, 5] = r
        out[j, 6] = a * (1.0 - e)
    return out


@njit(cache=True)
def thrust_sq_batch(Z, thetas, center, smat, pmat, mu):
    """Batched ||U||^2 only (no gradients); see thrust_sq_and_grad_batch."""
    B = Z.shape[0]
    J = np.empty(B)
    y = np.empty(6)
    for b in range(B):
        dx = smat @ Z[b]
        for k in range(5):
            y[k] = center[k] + dx[k]
        y[5] = thetas[b]
        G = gve(y, mu)
        u = G.T @ (pmat @ dx)
        J[b] = u[0] * u[0] + u[1] * u[1] + u[2] * u[2]
    return J


@njit(cache=True)
def thrust_sq_and_grad_batch(Z, thetas, center, smat, pmat, mu):
    """Batched ||U||^2 and its gradient for the thrust-bound minimization.

    The decision variables are ball coordinates z (X = center + smat @ z,
    smat = L^{-T} from P = L L^T) and the true anomaly theta.  The control
    is evaluated against the ball center, i.e. U = -G(X, theta)^T P
    (X - center).

    Args:
        Z: (B, 5) ball coordinates.
        thetas: (B,) true anomalies.
        center: (5,) reference elements (the sublevel-set center).
        smat: (5, 5) map from ball coordinates to element offsets.
        pmat: (5, 5) weight matrix.
        mu: gravitational parameter.

    Returns:
        J: (B,) values of ||U||^2.
        gZ: (B, 5) gradient of J in z.
        gT: (B,) gradient of J in theta.
    """
    B = Z.shape[0]
    J = np.empty(B)
    gZ = np.empty((B, 5))
    gT = np.empty(B)
    y = np.empty(6)
    for b in range(B):
        dx = smat @ Z[b]
        for k in range(5):
            y[k] = center[k] + dx[k]
        y[5] = thetas[b]
        G, dG = gve_and_partials(y, mu)
        w = pmat @ dx
        u = G.T @ w  # = -U; ||u|| == ||U||
        J[b] = u[0] * u[0] + u[1] * u[1] + u[2] * u[2]

        # dJ/dxi = 2 u . (dG/dxi^T w + G^T P e_xi); the second term over all
        # element coordinates collapses to 2 P G u.
        gx = 2.0 * (pmat @ (G @ u))
        for k in range(6):
            acc = 0.0
            for m in range(5):
                for n in range(3):
                    acc += w[m] * dG[m, n, k] * u[n]
            if k < 5:
                gx[k] += 2.0 * acc
            else:
                gT[b] = 2.0 * acc
        gZ[b] = smat.T @ gx
    return J, gZ, gT
