"""Canonical JSON: one byte representation per value.

Sorted keys, no whitespace, shortest round-trip floats, trailing newline.
The CLI and the HTTP API both serialize through here, which is what makes
their outputs byte-comparable.
"""

import json
import math

import numpy as np

from .errors import ValidationError


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples to plain Python.
    Non-finite floats are rejected: they have no canonical JSON form."""
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            if not isinstance(k, str):
                k = str(k)
            out[k] = to_jsonable(v)
        return out
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValidationError("canonical JSON: non-finite float")
        return v
    if isinstance(obj, (np.integer, int)) or isinstance(obj, (str, bool)) \
            or obj is None:
        return int(obj) if isinstance(obj, np.integer) else obj
    raise ValidationError(f"canonical JSON: unsupported type {type(obj)!r}")


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True,
                      separators=(",", ":"), ensure_ascii=False) + "\n"


def canonical_json_bytes(obj) -> bytes:
    return canonical_json(obj).encode("utf-8")
