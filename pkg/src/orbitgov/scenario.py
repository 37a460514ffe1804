"""Declarative scenario files: parsing, validation, and round-trip output.

A scenario is one human-editable YAML document with nested sections for
the initial state, target elements, constraint limits, governor and
integrator configuration, and the weight-matrix set.  Angles may be given
as plain numbers (radians), as strings with a "deg" or "rad" suffix, or as
simple pi expressions such as "pi/2" or "3pi/2".  Unknown keys anywhere
are rejected with the offending dotted path.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .constraints import ConstraintLimits
from .controller import WeightMatrix
from .elements import Constants, FullState, SlowElements
from .governor import GovernorConfig, ModeSet, build_rotated_p_set
from .sim import SimConfig

__all__ = [
    "ScenarioError",
    "ScenarioConfig",
    "parse_scenario",
    "parse_scenario_text",
    "serialize_scenario",
    "bundled_scenario_path",
    "bundled_scenario_names",
]

_ANGLE_RE = re.compile(
    r"^\s*([+-]?\d*\.?\d*(?:[eE][+-]?\d+)?)\s*(?:\*\s*)?pi\s*(?:/\s*(\d*\.?\d+))?\s*$")
_SUFFIX_RE = re.compile(r"^\s*([+-]?\d*\.?\d+(?:[eE][+-]?\d+)?)\s*(deg|rad)\s*$")


class ScenarioError(ValueError):
    """Scenario file cannot be parsed into valid domain types."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated scenario ready to run."""

    name: str
    initial: FullState
    target: SlowElements
    limits: ConstraintLimits
    governor: GovernorConfig
    modes: ModeSet
    sim: SimConfig
    constants: Constants
    out_name: str | None = None


def _parse_angle(value, path: str) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        m = _SUFFIX_RE.match(value)
        if m:
            x = float(m.group(1))
            return math.radians(x) if m.group(2) == "deg" else x
        m = _ANGLE_RE.match(value)
        if m:
            coef = m.group(1)
            coef_val = float(coef) if coef not in ("", "+", "-") else float(coef + "1")
            div = float(m.group(2)) if m.group(2) else 1.0
            return coef_val * math.pi / div
    raise ScenarioError(f"{path}: cannot parse angle {value!r} "
                        "(use radians, 'X deg', or 'Npi/M')")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    return float(value)


class _Section:
    """Mapping view that tracks consumed keys and rejects leftovers."""

    def __init__(self, data, path: str):
        if not isinstance(data, dict):
            raise ScenarioError(f"{path}: expected a mapping")
        self.data = data
        self.path = path
        self.seen = set()

    def get(self, key, default=None, required=False):
        self.seen.add(key)
        if key not in self.data:
            if required:
                raise ScenarioError(f"{self.path}.{key}: missing required key")
            return default
        return self.data[key]

    def number(self, key, default=None, required=False):
        v = self.get(key, default=None, required=required)
        if v is None:
            return default
        return _number(v, f"{self.path}.{key}")

    def angle(self, key, default=None, required=False):
        v = self.get(key, default=None, required=required)
        if v is None:
            return default
        return _parse_angle(v, f"{self.path}.{key}")

    def section(self, key, required=True):
        v = self.get(key, required=required)
        if v is None:
            return None
        return _Section(v, f"{self.path}.{key}")

    def finish(self):
        unknown = set(self.data) - self.seen
        if unknown:
            raise ScenarioError(
                f"{self.path}: unknown keys {sorted(unknown)}")


def _domain(path: str, builder):
    """Re-raise domain-type validation errors with the section path."""
    try:
        return builder()
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def parse_scenario_text(text: str, name_hint: str = "scenario") -> ScenarioConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    root = _Section(raw, "scenario")

    name = root.get("name", default=name_hint)
    if not isinstance(name, str) or not name:
        raise ScenarioError("scenario.name: expected a nonempty string")

    sec = root.section("initial")
    initial = _domain(sec.path, lambda: FullState(
        SlowElements(sec.number("a", required=True),
                     sec.number("e", required=True),
                     sec.angle("i", required=True),
                     sec.angle("raan", required=True),
                     sec.angle("argp", required=True)),
        sec.angle("theta", required=True)))
    sec.finish()

    sec = root.section("target")
    target = _domain(sec.path, lambda: SlowElements(
        sec.number("a", required=True), sec.number("e", required=True),
        sec.angle("i", required=True), sec.angle("raan", required=True),
        sec.angle("argp", required=True)))
    sec.finish()

    sec = root.section("limits")
    limits = _domain(sec.path, lambda: ConstraintLimits(
        r_min=sec.number("r_min", required=True),
        u_max=sec.number("u_max", required=True),
        e_min=sec.number("e_min", default=1e-6),
        eps_r=sec.number("eps_r", default=1.0),
        eps_e=sec.number("eps_e", default=1e-4)))
    sec.finish()

    sec = root.section("governor")
    backend = sec.get("backend", default="lyapunov-set")
    governor = _domain(sec.path, lambda: GovernorConfig(
        delta=sec.number("delta", default=0.01),
        gamma=sec.number("gamma", default=0.2),
        n_steps=int(sec.number("n_steps", default=12)),
        update_period=sec.number("update_period", default=900.0),
        backend=backend,
        prediction_horizon=sec.number("prediction_horizon", default=None),
        prediction_sample=sec.number("prediction_sample", default=60.0),
        prediction_rel_tol=sec.number("prediction_rel_tol", default=1e-8),
        prediction_abs_tol=sec.number("prediction_abs_tol", default=1e-10),
        terminal_v_factor=sec.number("terminal_v_factor", default=1e-6)))
    sec.finish()

    sec = root.section("modes")
    explicit = sec.get("matrices")
    if explicit is not None:
        mats = []
        for j, m in enumerate(explicit):
            arr = np.asarray(m, dtype=float)
            mats.append(_domain(f"{sec.path}.matrices[{j}]",
                                lambda a=arr: WeightMatrix(a)))
    else:
        p0 = sec.get("p0_diag", required=True)
        rot = sec.get("rotation_a", required=True)
        r_min_rot = sec.number("rotation_r_min", default=limits.r_min)
        mats = _domain(sec.path, lambda: build_rotated_p_set(
            np.asarray(p0, dtype=float), [float(v) for v in rot], r_min_rot))
    thresholds = sec.get("thresholds", default=[])
    modes = _domain(sec.path, lambda: ModeSet(
        tuple(mats), tuple(float(t) for t in thresholds)))
    sec.finish()

    sec = root.section("sim")
    sim = _domain(sec.path, lambda: SimConfig(
        t_end=sec.number("t_end", required=True),
        rel_tol=sec.number("rel_tol", default=1e-10),
        abs_tol=sec.number("abs_tol", default=1e-12),
        max_step=sec.number("max_step", default=60.0),
        log_period=sec.number("log_period", default=60.0),
        violation_tol_c1=sec.number("violation_tol_c1", default=1e-3),
        violation_tol_c2=sec.number("violation_tol_c2", default=1e-12),
        violation_tol_c3=sec.number("violation_tol_c3", default=1e-9),
        stop_v_factor=sec.number("stop_v_factor", default=1e-10),
        converge_rel=sec.number("converge_rel", default=1e-3),
        converge_angle=sec.number("converge_angle", default=1e-3)))
    sec.finish()

    sec = root.section("constants", required=False)
    if sec is not None:
        constants = _domain(sec.path, lambda: Constants(
            mu=sec.number("mu", default=Constants().mu)))
        sec.finish()
    else:
        constants = Constants()

    sec = root.section("output", required=False)
    out_name = None
    if sec is not None:
        out_name = sec.get("dir")
        if out_name is not None and not isinstance(out_name, str):
            raise ScenarioError("scenario.output.dir: expected a string")
        sec.finish()

    root.finish()
    return ScenarioConfig(name=name, initial=initial, target=target,
                          limits=limits, governor=governor, modes=modes,
                          sim=sim, constants=constants, out_name=out_name)


def parse_scenario(path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {p}: {exc}") from exc
    return parse_scenario_text(text, name_hint=p.stem)


def serialize_scenario(cfg: ScenarioConfig) -> str:
    """Scenario back to YAML; parsing the output reproduces cfg field for field.

    Angles are emitted as plain radians, and the mode set as explicit
    matrices (the rotated-set shorthand is an input convenience only).
    """
    el = cfg.initial.elements
    doc = {
        "name": cfg.name,
        "initial": {"a": el.a, "e": el.e, "i": el.i, "raan": el.raan,
                    "argp": el.argp, "theta": cfg.initial.theta},
        "target": {"a": cfg.target.a, "e": cfg.target.e, "i": cfg.target.i,
                   "raan": cfg.target.raan, "argp": cfg.target.argp},
        "limits": {"r_min": cfg.limits.r_min, "u_max": cfg.limits.u_max,
                   "e_min": cfg.limits.e_min, "eps_r": cfg.limits.eps_r,
                   "eps_e": cfg.limits.eps_e},
        "governor": {
            "delta": cfg.governor.delta, "gamma": cfg.governor.gamma,
            "n_steps": cfg.governor.n_steps,
            "update_period": cfg.governor.update_period,
            "backend": cfg.governor.backend,
            "prediction_sample": cfg.governor.prediction_sample,
            "prediction_rel_tol": cfg.governor.prediction_rel_tol,
            "prediction_abs_tol": cfg.governor.prediction_abs_tol,
            "terminal_v_factor": cfg.governor.terminal_v_factor,
        },
        "modes": {
            "matrices": [[list(map(float, row)) for row in m.p] for m in cfg.modes.matrices],
            "thresholds": list(cfg.modes.thresholds),
        },
        "sim": {
            "t_end": cfg.sim.t_end, "rel_tol": cfg.sim.rel_tol,
            "abs_tol": cfg.sim.abs_tol, "max_step": cfg.sim.max_step,
            "log_period": cfg.sim.log_period,
            "violation_tol_c1": cfg.sim.violation_tol_c1,
            "violation_tol_c2": cfg.sim.violation_tol_c2,
            "violation_tol_c3": cfg.sim.violation_tol_c3,
            "stop_v_factor": cfg.sim.stop_v_factor,
            "converge_rel": cfg.sim.converge_rel,
            "converge_angle": cfg.sim.converge_angle,
        },
        "constants": {"mu": cfg.constants.mu},
    }
    if cfg.governor.prediction_horizon is not None:
        doc["governor"]["prediction_horizon"] = cfg.governor.prediction_horizon
    if cfg.out_name is not None:
        doc["output"] = {"dir": cfg.out_name}
    return yaml.safe_dump(doc, sort_keys=False)


def bundled_scenario_names() -> list[str]:
    files = resources.files("orbitgov.scenarios")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def bundled_scenario_path(name: str) -> Path:
    """Filesystem path of a bundled scenario ('geo-lower', 'leo-raise', 'smoke')."""
    files = resources.files("orbitgov.scenarios")
    target = files / f"{name}.yaml"
    if not target.is_file():
        raise ScenarioError(
            f"no bundled scenario {name!r}; available: {bundled_scenario_names()}")
    return Path(str(target))
