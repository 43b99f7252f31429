"""Experiment configuration files.

A configuration is a YAML mapping; every section is optional and falls
back to the defaults below.  Unknown keys are rejected so that a typo never
silently changes an experiment.  Errors name the offending field path, for
example ``system.drifts[1].a``, or the line and column of a YAML syntax
error.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .bounds import VARIANTS
from .coupled_system import SystemConfig
from .drifts import FAMILIES, make_drift
from .errors import ConfigError, LevySyncError
from .levy_process import KINDS, LevySpec, TimeGrid, build_noise_paths

DEFAULTS = {
    "seed": 7,
    "system": {
        "N": 3,
        "d": 1,
        "lambda": 1.0,
        "drifts": [{"family": "linear", "a": 6.0}, {"family": "cubic", "a": 6.0}, {"family": "sine", "a": 7.0}],
        "c": 1.0,
        "grid": {"t_start": 0.0, "t_end": 2.0, "step": 1e-3},
    },
    "noise": {
        "kind": "brownian",
        "intensity": 0.0,
        "jump_scale": 1.0,
        "alpha": 2.0,
        "drift_gamma": 0.0,
        "history": 40.0,
    },
    "x0": 0.0,
    "sweep": {"lambdas": [10.0, 100.0, 1000.0], "window": [0.5, 2.0], "base_step": 1e-3},
    "attractor": {"horizons": [-5.0, -10.0, -20.0], "tol": 1e-6, "anchors": [0.0, 1.0, 2.0]},
    "eigen": {"variants": ["D"], "N": [3], "lambda": [1.0], "l": 5.0, "beta": None},
    "output": {"dir": ".", "format": "both"},
}

FORMATS = ("csv", "json", "both")


def _type_name(v) -> str:
    return type(v).__name__


def _number(v, path, positive=False, integer=False, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {_type_name(v)}")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{path}: expected an integer, got {v}")
        v = int(v)
    else:
        v = float(v)
    if not np.isfinite(v):
        raise ConfigError(f"{path}: must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{path}: must be > 0, got {v}")
    return v


def _numbers(v, path, **kw) -> list:
    if not isinstance(v, list):
        raise ConfigError(f"{path}: expected a list, got {_type_name(v)}")
    return [_number(x, f"{path}[{i}]", **kw) for i, x in enumerate(v)]


def _nested(v, path):
    """A number or a (nested) list of numbers."""
    if isinstance(v, list):
        return [_nested(x, f"{path}[{i}]") for i, x in enumerate(v)]
    return _number(v, path)


def _merge(defaults: dict, given: Any, path: str) -> dict:
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {_type_name(given)}")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            raise ConfigError(f"{where}: unknown field")
        if isinstance(defaults[key], dict) and key != "beta":
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


def _drifts(v, path) -> list:
    if isinstance(v, dict):
        v = [v]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}: expected a non-empty list of drifts")
    out = []
    for i, item in enumerate(v):
        where = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{where}: expected a mapping with 'family' and 'a'")
        extra = set(item) - {"family", "a"}
        if extra:
            raise ConfigError(f"{where}.{sorted(extra)[0]}: unknown field")
        fam = item.get("family")
        if fam not in FAMILIES:
            raise ConfigError(f"{where}.family: expected one of {sorted(FAMILIES)}, got {fam!r}")
        if "a" not in item:
            raise ConfigError(f"{where}.a: missing")
        out.append({"family": fam, "a": _number(item["a"], f"{where}.a")})
    return out


@dataclass
class ExperimentConfig:
    """Validated configuration; ``data`` is the fully expanded mapping that gets hashed."""

    data: dict
    source: str = "<defaults>"

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def section(self, name) -> dict:
        return self.data[name]

    def system(self, lam=None, grid=None) -> SystemConfig:
        s = self.data["system"]
        g = s["grid"]
        grid = TimeGrid(g["t_start"], g["t_end"], g["step"]) if grid is None else grid
        drifts = [make_drift(d["family"], d["a"]) for d in s["drifts"]]
        c = np.asarray(s["c"], dtype=float)
        return SystemConfig(s["N"], s["d"], s["lambda"] if lam is None else lam, drifts, c, grid, self.seed)

    def levy_spec(self) -> LevySpec:
        n = self.data["noise"]
        return LevySpec(n["kind"], n["intensity"], n["jump_scale"], n["alpha"], n["drift_gamma"], 1)

    def noise_paths(self, t_start, t_end, step):
        """Scalar noise paths on ``[t_start - history, t_end]``; the grid always contains 0."""
        hist = self.data["noise"]["history"]
        lo = min(t_start - hist, -step)
        hi = max(t_end, step)
        # keep 0 a node: start at a whole number of steps before it
        n_back = int(np.ceil(-lo / step - 1e-9))
        grid = TimeGrid(-n_back * step, hi, step)
        return build_noise_paths(self.levy_spec(), grid, self.seed, self.data["system"]["N"])

    def x0(self) -> np.ndarray:
        s = self.data["system"]
        x0 = np.asarray(self.data["x0"], dtype=float)
        try:
            return np.broadcast_to(x0, (s["N"], s["d"])).copy()
        except ValueError:
            raise ConfigError(f"x0: cannot broadcast shape {x0.shape} to ({s['N']}, {s['d']})") from None


def validate(data: dict) -> dict:
    """Type-check an expanded configuration in place."""
    data["seed"] = _number(data["seed"], "seed", integer=True)
    if data["seed"] < 0:
        raise ConfigError("seed: must be >= 0")
    s = data["system"]
    s["N"] = _number(s["N"], "system.N", integer=True, positive=True)
    s["d"] = _number(s["d"], "system.d", integer=True, positive=True)
    s["lambda"] = _number(s["lambda"], "system.lambda")
    if s["lambda"] < 0:
        raise ConfigError("system.lambda: must be >= 0")
    s["drifts"] = _drifts(s["drifts"], "system.drifts")
    s["c"] = _nested(s["c"], "system.c")
    g = s["grid"]
    for key in ("t_start", "t_end"):
        g[key] = _number(g[key], f"system.grid.{key}")
    g["step"] = _number(g["step"], "system.grid.step", positive=True)
    if not g["t_end"] > g["t_start"]:
        raise ConfigError("system.grid.t_end: must exceed t_start")
    n = data["noise"]
    if n["kind"] not in KINDS:
        raise ConfigError(f"noise.kind: expected one of {list(KINDS)}, got {n['kind']!r}")
    for key in ("intensity", "alpha", "drift_gamma"):
        n[key] = _number(n[key], f"noise.{key}")
    n["jump_scale"] = _number(n["jump_scale"], "noise.jump_scale", positive=True)
    n["history"] = _number(n["history"], "noise.history", positive=True)
    data["x0"] = _nested(data["x0"], "x0")
    sw = data["sweep"]
    sw["lambdas"] = _numbers(sw["lambdas"], "sweep.lambdas", positive=True)
    sw["window"] = _numbers(sw["window"], "sweep.window")
    if len(sw["window"]) != 2 or not sw["window"][1] > sw["window"][0]:
        raise ConfigError("sweep.window: expected [T1, T2] with T1 < T2")
    sw["base_step"] = _number(sw["base_step"], "sweep.base_step", positive=True)
    at = data["attractor"]
    at["horizons"] = _numbers(at["horizons"], "attractor.horizons")
    at["tol"] = _number(at["tol"], "attractor.tol", positive=True)
    at["anchors"] = _numbers(at["anchors"], "attractor.anchors")
    e = data["eigen"]
    variants = e["variants"] if isinstance(e["variants"], list) else [e["variants"]]
    for i, v in enumerate(variants):
        if v not in VARIANTS:
            raise ConfigError(f"eigen.variants[{i}]: expected one of {list(VARIANTS)}, got {v!r}")
    e["variants"] = variants
    e["N"] = _numbers(e["N"] if isinstance(e["N"], list) else [e["N"]], "eigen.N", integer=True, positive=True)
    e["lambda"] = _numbers(e["lambda"] if isinstance(e["lambda"], list) else [e["lambda"]], "eigen.lambda")
    e["l"] = _number(e["l"], "eigen.l")
    e["beta"] = _number(e["beta"], "eigen.beta", allow_none=True)
    o = data["output"]
    if not isinstance(o["dir"], str):
        raise ConfigError("output.dir: expected a string")
    if o["format"] not in FORMATS:
        raise ConfigError(f"output.format: expected one of {list(FORMATS)}, got {o['format']!r}")
    return data


def parse_text(text: str, source="<string>") -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark is not None else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{where}: YAML syntax error: {problem}") from None
    data = _merge(DEFAULTS, raw, "")
    try:
        validate(data)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return ExperimentConfig(data, source)


def load(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_text(text, str(path))


def default_config() -> ExperimentConfig:
    return ExperimentConfig(validate(copy.deepcopy(DEFAULTS)))


def apply_overrides(cfg: ExperimentConfig, seed=None, step=None, fmt=None, out=None) -> ExperimentConfig:
    data = copy.deepcopy(cfg.data)
    if seed is not None:
        data["seed"] = seed
    if step is not None:
        data["system"]["grid"]["step"] = step
    if fmt is not None:
        data["output"]["format"] = fmt
    if out is not None:
        data["output"]["dir"] = out
    try:
        validate(data)
    except ConfigError as exc:
        raise ConfigError(f"command line: {exc}") from None
    return ExperimentConfig(data, cfg.source)


def check_buildable(cfg: ExperimentConfig) -> None:
    """Surface module-level invariant violations as configuration errors."""
    try:
        cfg.system()
        cfg.levy_spec()
        cfg.x0()
    except ConfigError:
        raise
    except LevySyncError as exc:
        raise ConfigError(f"{cfg.source}: {exc}") from None
