"""Frozen trajectory-CSV contract and artifact loading.

The column list below is the published schema of the simulator's
trajectory.csv.  A CSV whose header differs in any way (names, order,
count) is rejected: silent column drift is how plots lie.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

__all__ = ["SCHEMA_COLUMNS", "SchemaError", "RunArtifacts", "load_run"]

SCHEMA_COLUMNS = (
    "t", "a", "e", "inc", "raan", "argp", "theta",
    "ref_a", "ref_e", "ref_inc", "ref_raan", "ref_argp", "p_index",
    "u_s", "u_t", "u_w", "u_norm", "lyapunov",
    "c1", "c2", "c3", "r", "r_p", "dv",
)


class SchemaError(ValueError):
    """Artifact does not match the frozen schema."""


class RunArtifacts:
    """Loaded trajectory plus the run summary of one simulation directory."""

    def __init__(self, data: np.ndarray, summary: dict, run_dir: Path):
        self.data = data
        self.summary = summary
        self.run_dir = run_dir

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, SCHEMA_COLUMNS.index(name)]
        except ValueError as exc:
            raise SchemaError(f"unknown column {name!r}") from exc

    @property
    def target(self) -> dict:
        return self.summary["target_elements"]

    @property
    def limits(self) -> dict:
        return self.summary["limits"]


def load_run(run_dir) -> RunArtifacts:
    """Load and validate trajectory.csv and summary.json from a run directory.

    Raises:
        SchemaError: missing files, header mismatch, ragged or empty rows.
    """
    run_dir = Path(run_dir)
    traj = run_dir / "trajectory.csv"
    summ = run_dir / "summary.json"
    if not traj.is_file():
        raise SchemaError(f"no trajectory.csv in {run_dir}")
    if not summ.is_file():
        raise SchemaError(f"no summary.json in {run_dir}")

    with open(traj, newline="") as f:
        reader = csv.reader(f)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{traj} is empty") from None
        if header != SCHEMA_COLUMNS:
            raise SchemaError(
                f"{traj} header does not match the frozen schema: "
                f"got {header}")
        rows = []
        for k, row in enumerate(reader, start=2):
            if len(row) != len(SCHEMA_COLUMNS):
                raise SchemaError(f"{traj}:{k}: expected "
                                  f"{len(SCHEMA_COLUMNS)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise SchemaError(f"{traj}:{k}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{traj} has a header but no samples")

    data = np.asarray(rows)
    if np.any(np.diff(data[:, 0]) <= 0):
        raise SchemaError(f"{traj}: time column is not strictly increasing")

    try:
        summary = json.loads(summ.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{summ}: {exc}") from exc
    for key in ("target_elements", "limits"):
        if key not in summary:
            raise SchemaError(f"{summ}: missing {key!r}")
    return RunArtifacts(data, summary, run_dir)
