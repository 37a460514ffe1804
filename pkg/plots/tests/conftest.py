"""Fixtures: synthetic run artifacts built from first principles.

The synthetic trajectory is a pure two-body orbit (constant elements,
Kepler-propagated true anomaly), so every derived column can be computed
exactly without touching the simulation package.
"""

import csv
import json
import math

import numpy as np
import pytest

from orbitplots.schema import SCHEMA_COLUMNS

MU = 3.986004418e5


def kepler_theta_series(a, e, theta0, times):
    """True anomaly over time for an unforced orbit (via Kepler's equation)."""
    n = math.sqrt(MU / a ** 3)
    ecc0 = 2.0 * math.atan(math.sqrt((1 - e) / (1 + e)) * math.tan(theta0 / 2.0))
    m0 = ecc0 - e * math.sin(ecc0)
    out = np.empty(len(times))
    for j, t in enumerate(times):
        m = m0 + n * t
        ecc = m
        for _ in range(60):
            ecc = ecc - (ecc - e * math.sin(ecc) - m) / (1 - e * math.cos(ecc))
        th = 2.0 * math.atan2(math.sqrt(1 + e) * math.sin(ecc / 2.0),
                              math.sqrt(1 - e) * math.cos(ecc / 2.0))
        out[j] = th % (2 * math.pi)
    return out


def write_run_dir(tmp_path, n_rows=240, r_column_error=0.0):
    """Materialize a schema-conforming run directory; returns its path."""
    a, e, inc, raan, argp = 9000.0, 0.2, 1.1, 0.7, 2.0
    r_min, u_max, e_min = 6628.0, 1.25e-3, 1e-6
    times = np.arange(n_rows) * 60.0
    thetas = kepler_theta_series(a, e, 1.0, times)
    p = a * (1 - e * e)
    r = p / (1 + e * np.cos(thetas)) + r_column_error

    rows = np.zeros((n_rows, len(SCHEMA_COLUMNS)))
    col = {name: j for j, name in enumerate(SCHEMA_COLUMNS)}
    rows[:, col["t"]] = times
    rows[:, col["a"]] = a
    rows[:, col["e"]] = e
    rows[:, col["inc"]] = inc
    rows[:, col["raan"]] = raan
    rows[:, col["argp"]] = argp
    rows[:, col["theta"]] = thetas
    rows[:, col["ref_a"]] = a
    rows[:, col["ref_e"]] = e
    rows[:, col["ref_inc"]] = inc
    rows[:, col["ref_raan"]] = raan
    rows[:, col["ref_argp"]] = argp
    rows[:, col["p_index"]] = 2
    rows[:, col["c1"]] = a * (1 - e) - r_min
    rows[:, col["c2"]] = u_max ** 2
    rows[:, col["c3"]] = e - e_min
    rows[:, col["r"]] = r
    rows[:, col["r_p"]] = a * (1 - e)

    run_dir = tmp_path / "synthetic"
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "trajectory.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SCHEMA_COLUMNS)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    summary = {
        "scenario": "synthetic",
        "target_elements": {"a": a, "e": e, "i": inc, "raan": raan, "argp": argp},
        "limits": {"r_min": r_min, "u_max": u_max, "e_min": e_min},
    }
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    return run_dir


@pytest.fixture
def synthetic_run(tmp_path):
    return write_run_dir(tmp_path)
