"""Deterministic report serialization.

JSON artifacts are written with sorted keys and 17-significant-digit
floats so that reruns of the same configuration are byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def _encode(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        inner = ",".join(f"{json.dumps(str(k))}:{_encode(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "item"):  # numpy scalars
        return _encode(obj.item())
    if hasattr(obj, "tolist"):
        return _encode(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps(obj) -> str:
    return _encode(obj) + "\n"


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(dumps(obj))
