"""Command-line entry point: run scenarios, compare backends, persist results.

Artifacts per run, under <out-dir>/<name>/:
  trajectory.csv       one row per log sample, SCHEMA_COLUMNS order
  governor_events.csv  one row per governor instant
  summary.json         final elements, duration, margins, total delta-v

Exit codes: 0 success, 2 scenario parse error, 3 infeasible initial state,
4 integrator failure, 5 flagged constraint violation.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import json
import sys
from pathlib import Path

from .scenario import (
    ScenarioConfig,
    ScenarioError,
    bundled_scenario_names,
    bundled_scenario_path,
    parse_scenario,
)
from .sim import (
    SCHEMA_COLUMNS,
    FlaggedViolationError,
    InfeasibleStartError,
    IntegrationError,
    TrajectoryRecord,
    run_closed_loop,
)

__all__ = ["main", "run_scenario", "compare_backends", "write_artifacts"]

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_INTEGRATION = 4
EXIT_VIOLATION = 5

_EVENT_COLUMNS = (
    "t", "k", "p_index_before", "p_index_after", "p_des_index",
    "mode_switch_tested", "mode_switched", "candidates_evaluated",
    "steps_accepted", "backtracks", "delta_final", "accepted",
    "ref_a", "ref_e", "ref_inc", "ref_raan", "ref_argp",
)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_scenario(cfg: ScenarioConfig, backend: str | None = None,
                 t_end: float | None = None) -> TrajectoryRecord:
    """Execute one scenario, optionally overriding backend and duration."""
    gcfg = cfg.governor
    if backend is not None:
        gcfg = dataclasses.replace(gcfg, backend=backend)
    scfg = cfg.sim
    if t_end is not None:
        scfg = dataclasses.replace(scfg, t_end=t_end)
    return run_closed_loop(cfg.initial, cfg.target, cfg.modes, gcfg, scfg,
                           cfg.limits, cfg.constants)


def summarize(cfg: ScenarioConfig, rec: TrajectoryRecord, backend: str) -> dict:
    final = rec.final_elements()
    ref = rec.final_reference()
    min_c1, min_c2, min_c3 = rec.min_constraints()
    duration = rec.converged_from(cfg.target, cfg.sim.converge_rel,
                                  cfg.sim.converge_angle)
    return {
        "scenario": cfg.name,
        "backend": backend,
        "t_final_s": rec.meta["t_final"],
        "stopped_early": rec.meta["stopped_early"],
        "converged_at_s": duration,
        "n_instants": rec.meta["n_instants"],
        "target_elements": {"a": cfg.target.a, "e": cfg.target.e,
                            "i": cfg.target.i, "raan": cfg.target.raan,
                            "argp": cfg.target.argp},
        "limits": {"r_min": cfg.limits.r_min, "u_max": cfg.limits.u_max,
                   "e_min": cfg.limits.e_min},
        "final_elements": {"a": final.a, "e": final.e, "i": final.i,
                           "raan": final.raan, "argp": final.argp},
        "final_reference": {"a": ref.a, "e": ref.e, "i": ref.i,
                            "raan": ref.raan, "argp": ref.argp},
        "min_c1_km": min_c1,
        "min_c2_km2_s4": min_c2,
        "min_c3": min_c3,
        "max_u_norm_km_s2": float(rec.column("u_norm").max()),
        "delta_v_km_s": rec.delta_v,
        "violations": 0,
    }


def write_artifacts(cfg: ScenarioConfig, rec: TrajectoryRecord, out_dir: Path,
                    backend: str) -> Path:
    """Write trajectory/events CSVs and the JSON summary; returns the run dir."""
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    with open(run_dir / "trajectory.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SCHEMA_COLUMNS)
        p_idx = SCHEMA_COLUMNS.index("p_index")
        for row in rec.data:
            out = [repr(float(v)) for v in row]
            out[p_idx] = str(int(row[p_idx]))
            w.writerow(out)

    with open(run_dir / "governor_events.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(_EVENT_COLUMNS)
        for ev in rec.events:
            w.writerow([_fmt(getattr(ev, name)) for name in _EVENT_COLUMNS])

    with open(run_dir / "summary.json", "w") as f:
        json.dump(summarize(cfg, rec, backend), f, indent=2, sort_keys=True)
        f.write("\n")
    return run_dir


def compare_backends(cfg: ScenarioConfig, out_dir: Path,
                     backends: tuple[str, str] = ("lyapunov-set", "prediction"),
                     t_end: float | None = None) -> dict:
    """Run the scenario under two backends and emit a side-by-side report."""
    report = {"scenario": cfg.name, "runs": []}
    for j, backend in enumerate(backends):
        rec = run_scenario(cfg, backend=backend, t_end=t_end)
        sub = Path(out_dir) / f"{j}-{backend}"
        write_artifacts(cfg, rec, sub, backend)
        report["runs"].append(summarize(cfg, rec, backend))
    with open(Path(out_dir) / "comparison.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    return report


@contextlib.contextmanager
def _forbid_rng():
    """Replace common RNG entry points with guards for --seedless runs."""
    import random as _random

    import numpy as _np

    def _blow(*_a, **_k):
        raise RuntimeError("RNG use detected in a --seedless run")

    saved_np = {name: getattr(_np.random, name)
                for name in ("random", "rand", "randn", "uniform", "normal",
                             "default_rng", "seed", "randint")}
    saved_py = {name: getattr(_random, name)
                for name in ("random", "uniform", "randint", "gauss", "seed")}
    try:
        for name in saved_np:
            setattr(_np.random, name, _blow)
        for name in saved_py:
            setattr(_random, name, _blow)
        yield
    finally:
        for name, fn in saved_np.items():
            setattr(_np.random, name, fn)
        for name, fn in saved_py.items():
            setattr(_random, name, fn)


def _resolve_scenario(arg: str) -> ScenarioConfig:
    p = Path(arg)
    if p.exists():
        return parse_scenario(p)
    if arg in bundled_scenario_names():
        return parse_scenario(bundled_scenario_path(arg))
    raise ScenarioError(
        f"{arg!r} is neither a file nor a bundled scenario "
        f"(bundled: {bundled_scenario_names()})")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="orbitgov",
        description="Constrained orbital transfers with an incremental reference governor.")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario",
                        help="scenario file path or bundled name "
                             f"({', '.join(bundled_scenario_names())})")
    common.add_argument("--out-dir", default="runs", help="artifact directory")
    common.add_argument("--t-end", type=float, default=None,
                        help="override simulated duration (s)")
    common.add_argument("--seedless", action="store_true",
                        help="assert that no RNG is touched during the run")

    run = sub.add_parser("run", parents=[common],
                         help="run one scenario and write artifacts")
    run.add_argument("--backend", choices=("lyapunov-set", "prediction"),
                     default=None, help="override the admissibility backend")

    sub.add_parser("compare", parents=[common],
                   help="run both admissibility backends and compare")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    guard = _forbid_rng() if args.seedless else contextlib.nullcontext()
    try:
        with guard:
            if args.command == "run":
                backend = args.backend or cfg.governor.backend
                rec = run_scenario(cfg, backend=args.backend, t_end=args.t_end)
                out = Path(args.out_dir) / (cfg.out_name or cfg.name)
                write_artifacts(cfg, rec, out, backend)
                s = summarize(cfg, rec, backend)
                print(f"{cfg.name} [{backend}]: t_final={s['t_final_s']:.0f} s, "
                      f"converged_at={s['converged_at_s']}, "
                      f"min margins=({s['min_c1_km']:.3e}, {s['min_c2_km2_s4']:.3e}, "
                      f"{s['min_c3']:.3e}), dv={s['delta_v_km_s']:.4f} km/s")
                print(f"artifacts: {out}")
            else:
                out = Path(args.out_dir) / f"{cfg.out_name or cfg.name}-compare"
                report = compare_backends(cfg, out, t_end=args.t_end)
                for s in report["runs"]:
                    print(f"{s['backend']:>13}: converged_at={s['converged_at_s']}, "
                          f"dv={s['delta_v_km_s']:.4f} km/s, "
                          f"min margins=({s['min_c1_km']:.3e}, "
                          f"{s['min_c2_km2_s4']:.3e}, {s['min_c3']:.3e})")
                print(f"artifacts: {out}")
    except InfeasibleStartError as exc:
        print(f"infeasible initial state: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except FlaggedViolationError as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
