"""Serialization of run reports (JSON with 17 significant digits, CSV, text)."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "index",
    "point",
    "epsilon",
    "normK2",
    "normKtilde2",
    "normT2",
    "normNablaK2",
    "normNablaT2",
    "slack",
    "slack_difference",
    "mu",
    "scalar_curvature",
    "normR2",
    "gauss_residual",
    "codazzi_residual",
    "verdict",
    "lambdas",
    "status",
)


def format_float(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            pad + json.dumps(k, ensure_ascii=False) + ": " + _encode(v, indent, level + 1)
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(doc, indent=2):
    """JSON text; floats carry 17 significant digits, non-finite floats become null."""
    return _encode(_plain(doc), indent, 0) + "\n"


def to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        out = []
        for col in CSV_COLUMNS:
            v = _plain(row.get(col, ""))
            if isinstance(v, list):
                v = " ".join(format_float(x) for x in v)
            elif isinstance(v, float):
                v = format_float(v)
            elif v is None:
                v = ""
            out.append(v)
        writer.writerow(out)
    return buf.getvalue()
