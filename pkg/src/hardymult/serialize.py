"""JSON output with 17 significant digits per float, so reruns are byte-identical."""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np


def _float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    # keep a float marker so readers do not turn 1.0 into an int
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def _encode(obj, out: list, indent: int | None, level: int) -> None:
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, Fraction):
        out.append(json.dumps(str(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, complex):
        _encode([obj.real, obj.imag], out, indent, level)
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out, indent, level)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        pad, inner = _pads(indent, level)
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append(("," if i else "") + inner + json.dumps(str(k)) + ":" + (" " if indent else ""))
            _encode(v, out, indent, level + 1)
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        # numeric rows stay on one line
        flat = indent is None or all(not isinstance(v, (dict, list, tuple)) for v in obj) \
            or all(isinstance(v, (list, tuple)) and len(v) <= 2 for v in obj)
        pad, inner = _pads(None if flat else indent, level)
        out.append("[")
        for i, v in enumerate(obj):
            out.append(("," if i else "") + inner)
            _encode(v, out, None if flat else indent, level + 1)
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _pads(indent, level):
    if indent is None:
        return "", ""
    return "\n" + " " * (indent * level), "\n" + " " * (indent * (level + 1))


def dumps(obj, indent: int | None = 2) -> str:
    out: list[str] = []
    _encode(obj, out, indent, 0)
    return "".join(out) + "\n"


def dump(obj, path, indent: int | None = 2) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj, indent))
