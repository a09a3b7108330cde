"""JSON instance files.

Coverage instances::

    {"schema": "mpgreedy.instance/1", "objective": "coverage",
     "cells": [{"id": 0, "weight": 1}, {"id": 1, "weight": "3/2"}, ...],
     "elements": [[cell ids of element 0], [cell ids of element 1], ...],
     "agents": [[element ids], ...], "k": 2, "m": 1, "meta": {...}}

Log-det instances replace ``cells``/``elements`` by
``"matrices": {"Q0": [[...]], "elements": [[[...]], ...]}``. Rational
weights are written as ``"p/q"`` strings; floats use the shortest
round-trip representation, so loading a saved file is lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

from .objectives import CoverageFunction, LogDetFunction
from .policies import ProblemInstance

SCHEMA = "mpgreedy.instance/1"


def instance_to_json(inst: ProblemInstance) -> dict:
    obj = {"schema": SCHEMA}
    if isinstance(inst.f, CoverageFunction):
        obj["objective"] = "coverage"
        obj.update(inst.f.to_json())
    elif isinstance(inst.f, LogDetFunction):
        obj["objective"] = "logdet"
        obj["matrices"] = inst.f.to_json()
    else:
        raise TypeError(f"cannot serialize objective {type(inst.f).__name__}")
    obj["agents"] = [sorted(s) for s in inst.agent_elements]
    obj["k"] = inst.k
    obj["m"] = inst.m
    if inst.meta:
        obj["meta"] = inst.meta
    return obj


def instance_from_json(obj: dict) -> ProblemInstance:
    schema = obj.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ValueError(f"unsupported instance schema {schema!r}")
    kind = obj["objective"]
    if kind == "coverage":
        f = CoverageFunction.from_json(obj)
    elif kind == "logdet":
        f = LogDetFunction.from_json(obj["matrices"])
    else:
        raise ValueError(f"unknown objective {kind!r}")
    return ProblemInstance(f, obj["agents"], int(obj["k"]), int(obj.get("m", 0)), dict(obj.get("meta", {})))


def save_instance(path, inst: ProblemInstance) -> None:
    Path(path).write_text(json.dumps(instance_to_json(inst), sort_keys=True) + "\n", encoding="utf-8")


def load_instance(path) -> ProblemInstance:
    return instance_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
