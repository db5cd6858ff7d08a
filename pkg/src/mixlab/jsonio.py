"""JSON file formats for measures, meta-measures, theta-measures, test sets,
and convergence run specs.

All floats are serialized with shortest round-trip representation, so a
write/read/write cycle is byte-stable.  Malformed files raise SchemaError
with the JSON position or the offending field named.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .ground import TestSet, testset_from_dict
from .harness import SequenceSpec, geometric_schedule, harmonic_schedule
from .measures import DiscreteMeasure
from .mixing import MetaMeasure
from .parametric import ThetaMeasure

__all__ = [
    "load_json",
    "dump_json",
    "load_measure",
    "save_measure",
    "load_meta_measure",
    "save_meta_measure",
    "load_theta_measure",
    "save_theta_measure",
    "load_converge_spec",
]


def load_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"malformed JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}") from e


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_measure(path) -> DiscreteMeasure:
    return DiscreteMeasure.from_dict(load_json(path))


def save_measure(mu: DiscreteMeasure, path) -> None:
    dump_json(mu.to_dict(), path)


def load_meta_measure(path) -> MetaMeasure:
    return MetaMeasure.from_dict(load_json(path))


def save_meta_measure(nu: MetaMeasure, path) -> None:
    dump_json(nu.to_dict(), path)


def load_theta_measure(path) -> ThetaMeasure:
    return ThetaMeasure.from_dict(load_json(path))


def save_theta_measure(lam: ThetaMeasure, path) -> None:
    dump_json(lam.to_dict(), path)


def _schedule_from_field(value, steps: int) -> np.ndarray:
    if value is None or value == "harmonic":
        return harmonic_schedule(steps)
    if value == "geometric":
        return geometric_schedule(steps)
    if isinstance(value, dict):
        kind = value.get("kind")
        if kind == "harmonic":
            return harmonic_schedule(steps)
        if kind == "geometric":
            return geometric_schedule(steps, ratio=float(value.get("ratio", 0.5)))
        raise SchemaError(f"unknown schedule kind {kind!r}")
    if isinstance(value, list):
        return np.asarray(value, dtype=np.float64)
    raise SchemaError(f"schedule must be 'harmonic', 'geometric', an object, or an array, got {value!r}")


def load_converge_spec(path) -> dict:
    """Parse a convergence run spec file.

    Returns a dict with keys: spec (SequenceSpec), sets, set_ids, metric,
    gap_tol, cert_tol.
    """
    d = load_json(path)
    if not isinstance(d, dict):
        raise SchemaError("converge spec must be a JSON object")
    for field in ("kind", "base", "steps", "seed"):
        if field not in d:
            raise SchemaError(f"converge spec is missing field '{field}'")
    kind = d["kind"]
    if kind == "theta_path":
        base = ThetaMeasure.from_dict(d["base"])
    else:
        base = MetaMeasure.from_dict(d["base"])
    if not isinstance(d["steps"], int):
        raise SchemaError(f"field 'steps' must be an integer, got {d['steps']!r}")
    if not isinstance(d["seed"], int):
        raise SchemaError(f"field 'seed' must be an integer, got {d['seed']!r}")
    schedule = _schedule_from_field(d.get("schedule"), d["steps"])

    spec = SequenceSpec(
        kind=kind,
        base=base,
        steps=d["steps"],
        schedule=schedule,
        seed=d["seed"],
        direction=None if d.get("direction") is None else np.asarray(d["direction"], dtype=np.float64),
        start_weights=(
            None if d.get("start_weights") is None else np.asarray(d["start_weights"], dtype=np.float64)
        ),
        n_quantiles=int(d.get("n_quantiles", 64)),
    )

    raw_sets = d.get("sets", [])
    if not isinstance(raw_sets, list):
        raise SchemaError("field 'sets' must be a list of test sets")
    sets: list[TestSet] = []
    set_ids: list[str] = []
    for i, entry in enumerate(raw_sets):
        sets.append(testset_from_dict(entry))
        set_ids.append(str(entry.get("id", f"set{i}")))

    metric = d.get("metric", "w1")
    if metric not in ("w1", "bl"):
        raise SchemaError(f"field 'metric' must be 'w1' or 'bl', got {metric!r}")

    return {
        "spec": spec,
        "sets": sets,
        "set_ids": set_ids,
        "metric": metric,
        "gap_tol": float(d.get("gap_tol", 1e-6)),
        "cert_tol": float(d.get("cert_tol", 1e-6)),
    }
