"""Deterministic CSV and JSON output with 17 significant digits."""

from __future__ import annotations

import json
import math
from pathlib import Path

__all__ = ["fmt", "write_csv", "dumps_json", "write_json"]


def fmt(value) -> str:
    """Format a number with 17 significant digits (integers unchanged)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, int)):
        return fmt(obj)
    value = float(obj)
    if not math.isfinite(value):
        return "null"
    text = fmt(value)
    # keep floats recognizable as floats
    if not any(c in text for c in ".eE"):
        text += ".0"
    return text


def dumps_json(obj, indent: int = 2) -> str:
    """Serialize dicts, lists, strings and numbers; key order is preserved."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj))
