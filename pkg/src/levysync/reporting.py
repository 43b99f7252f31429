"""Deterministic report files.

JSON reports are written with sorted keys and two-space indentation and
carry a header ``{config_hash, seed, tool_version, kind}``; nothing in them
depends on the wall clock.  CSV files always start with a header row.  All
writes go to a temporary file in the target directory that is renamed into
place, so a failed run never leaves a partial file.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from . import __version__

SCHEMA_NAMES = ("simulate", "sweep", "attractor", "averaged", "eigen", "verify-all")


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _finite(obj):
    """Replace non-finite floats with strings so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return str(float(obj))
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_finite(obj), sort_keys=True, separators=(",", ":"), default=_default)


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON of ``config`` without its ``output`` section."""
    body = {k: v for k, v in config.items() if k != "output"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def header(kind, config: dict, seed) -> dict:
    return {"kind": kind, "config_hash": config_hash(config), "seed": seed, "tool_version": __version__}


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def json_text(report: dict) -> str:
    return json.dumps(_finite(report), sort_keys=True, indent=2, default=_default) + "\n"


def write_json(path, report: dict) -> Path:
    return atomic_write(path, json_text(report))


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return atomic_write(path, csv_text(columns, rows))


def trajectory_columns(N, d) -> list:
    return ["time"] + [f"x{j}_{k}" for j in range(N) for k in range(d)]


def trajectory_rows(times, states) -> Iterable[list]:
    flat = np.asarray(states).reshape(len(times), -1)
    for t, row in zip(times, flat):
        yield [float(t)] + [float(v) for v in row]


def path_rows(path) -> Iterable[list]:
    """Rows ``time, component_0, ...`` of a Levy path."""
    for t, row in zip(path.times, path.values):
        yield [float(t)] + [float(v) for v in row]


def load_schema(kind) -> dict:
    if kind not in SCHEMA_NAMES:
        raise KeyError(f"no schema for report kind {kind!r}")
    text = resources.files("levysync").joinpath("schemas", f"{kind}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(report: dict) -> None:
    """Validate against the shipped schema for ``report["header"]["kind"]``.

    Raises
    ------
    jsonschema.ValidationError
    """
    schema = load_schema(report["header"]["kind"])
    jsonschema.Draft202012Validator(schema).validate(report)
