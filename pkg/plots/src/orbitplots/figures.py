"""Figure builders over validated run artifacts.

Conventions follow the simulation reports: the state in solid blue, the
governed reference dash-dotted magenta, the target dashed black; constraint
figures draw the limit lines.  All figures have fixed sizes and carry no
timestamps, so re-rendering a run reproduces identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .conversion import positions_from_elements
from .schema import RunArtifacts, SchemaError

__all__ = ["FIGURES", "render_figure", "radii_consistency"]

_ELEMENT_PANELS = (
    ("a", "ref_a", "a", "semi-major axis [km]"),
    ("e", "ref_e", "e", "eccentricity"),
    ("inc", "ref_inc", "i", "inclination [rad]"),
    ("raan", "ref_raan", "raan", "RAAN [rad]"),
    ("argp", "ref_argp", "argp", "arg. of periapsis [rad]"),
)

RADII_RTOL = 1e-6


def _days(t):
    return t / 86400.0


def elements_figure(run: RunArtifacts):
    """Six panels: five elements with reference/target overlays, plus V."""
    t = _days(run.column("t"))
    fig, axes = plt.subplots(2, 3, figsize=(12.0, 6.5))
    for ax, (col, ref_col, key, label) in zip(axes.flat, _ELEMENT_PANELS):
        ax.plot(t, run.column(col), "b-", lw=1.0, label="state")
        ax.plot(t, run.column(ref_col), "m-.", lw=1.0, label="reference")
        ax.axhline(run.target[key], color="k", ls="--", lw=1.0, label="target")
        ax.set_xlabel("time [days]")
        ax.set_ylabel(label)
    ax_v = axes.flat[5]
    v = run.column("lyapunov")
    ax_v.semilogy(t, np.maximum(v, 1e-300), "b-", lw=1.0)
    ax_v.set_xlabel("time [days]")
    ax_v.set_ylabel("tracking energy V")
    axes.flat[0].legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def lyapunov_figure(run: RunArtifacts):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    v = run.column("lyapunov")
    ax.semilogy(_days(run.column("t")), np.maximum(v, 1e-300), "b-", lw=1.0)
    ax.set_xlabel("time [days]")
    ax.set_ylabel("tracking energy V")
    fig.tight_layout()
    return fig


def radius_figure(run: RunArtifacts):
    """Periapsis radius and instantaneous radius against the floor."""
    t = _days(run.column("t"))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t, run.column("r"), "c-", lw=0.8, label="r")
    ax.plot(t, run.column("r_p"), "b-", lw=1.2, label="r_p")
    ax.axhline(run.limits["r_min"], color="r", ls="--", lw=1.2, label="r_min")
    ax.set_xlabel("time [days]")
    ax.set_ylabel("radius [km]")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def thrust_figure(run: RunArtifacts):
    t = _days(run.column("t"))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t, run.column("u_norm"), "b-", lw=0.8, label="|U|")
    ax.axhline(run.limits["u_max"], color="r", ls="--", lw=1.2, label="U_max")
    ax.set_xlabel("time [days]")
    ax.set_ylabel("thrust acceleration [km/s^2]")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def eccentricity_margin_figure(run: RunArtifacts):
    t = _days(run.column("t"))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(t, run.column("e"), "b-", lw=1.0, label="e")
    ax.axhline(run.limits["e_min"], color="r", ls="--", lw=1.2, label="e_min")
    ax.set_xlabel("time [days]")
    ax.set_ylabel("eccentricity")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def radii_consistency(run: RunArtifacts):
    """Recompute radii from the element columns; confront the r column.

    Returns the worst relative deviation.  A mismatch beyond RADII_RTOL
    means the CSV is internally inconsistent and rendering aborts.
    """
    pos = positions_from_elements(run.column("a"), run.column("e"),
                                  run.column("inc"), run.column("raan"),
                                  run.column("argp"), run.column("theta"))
    r_csv = run.column("r")
    worst = float(np.max(np.abs(np.linalg.norm(pos, axis=1) - r_csv)
                         / np.abs(r_csv)))
    if worst > RADII_RTOL:
        raise SchemaError(
            f"recomputed radii disagree with the r column "
            f"(worst rel {worst:.3e} > {RADII_RTOL})")
    return worst


def trajectory3d_figure(run: RunArtifacts):
    """3-D transfer trajectory with initial and target orbits overlaid."""
    radii_consistency(run)
    pos = positions_from_elements(run.column("a"), run.column("e"),
                                  run.column("inc"), run.column("raan"),
                                  run.column("argp"), run.column("theta"))
    fig = plt.figure(figsize=(7.0, 7.0))
    ax = fig.add_subplot(projection="3d")
    ax.plot(pos[:, 0], pos[:, 1], pos[:, 2], "b-", lw=0.4, label="transfer")

    nu = np.linspace(0.0, 2 * np.pi, 361)
    first = {k: run.column(k)[0] for k in ("a", "e", "inc", "raan", "argp")}
    start = positions_from_elements(
        np.full(nu.size, first["a"]), np.full(nu.size, first["e"]),
        np.full(nu.size, first["inc"]), np.full(nu.size, first["raan"]),
        np.full(nu.size, first["argp"]), nu)
    tgt = run.target
    target = positions_from_elements(
        np.full(nu.size, tgt["a"]), np.full(nu.size, tgt["e"]),
        np.full(nu.size, tgt["i"]), np.full(nu.size, tgt["raan"]),
        np.full(nu.size, tgt["argp"]), nu)
    ax.plot(start[:, 0], start[:, 1], start[:, 2], "g-", lw=1.5,
            label="initial orbit")
    ax.plot(target[:, 0], target[:, 1], target[:, 2], "m-", lw=1.5,
            label="target orbit")
    ax.set_xlabel("x [km]")
    ax.set_ylabel("y [km]")
    ax.set_zlabel("z [km]")
    ax.legend(loc="upper right", fontsize=8)
    lim = float(np.max(np.abs(pos))) * 1.05
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_zlim(-lim, lim)
    return fig


FIGURES = {
    "elements": elements_figure,
    "lyapunov": lyapunov_figure,
    "radius": radius_figure,
    "thrust": thrust_figure,
    "eccentricity": eccentricity_margin_figure,
    "traj3d": trajectory3d_figure,
}


def render_figure(run: RunArtifacts, name: str, out_dir, fmt: str = "png"):
    """Render one named figure to <out_dir>/<name>.<fmt>; returns the path."""
    if name not in FIGURES:
        raise SchemaError(f"unknown figure {name!r}; available: "
                          f"{sorted(FIGURES)}")
    fig = FIGURES[name](run)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.{fmt}"
    metadata = {"CreationDate": None} if fmt == "pdf" else None
    fig.savefig(path, dpi=150, metadata=metadata)
    plt.close(fig)
    return path
