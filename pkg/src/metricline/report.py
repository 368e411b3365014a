"""JSON reports with a fixed field order and reproducible number formatting."""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from . import __version__

SCHEMA_VERSION = "metricline-report/1"

_ORDER = ("schema_version", "tool_version", "command", "candidate", "verdict", "necessary", "search",
          "config_echo", "timings")


def _plain(v):
    """Convert numpy scalars and containers into plain Python values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _num(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return format(v, ".17g")


def _dump(v, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(x, indent, level + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, list):
        if not v:
            return "[]"
        if all(not isinstance(x, (dict, list)) for x in v):
            return "[" + ", ".join(_dump(x, indent, level + 1) for x in v) + "]"
        return "[\n" + ",\n".join(pad + _dump(x, indent, level + 1) for x in v) + "\n" + end + "]"
    if v is None or isinstance(v, (bool, str)):
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _num(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(report: dict, indent: int = 2) -> str:
    """Serialize with the report's key order; floats get 17 significant digits."""
    return _dump(_plain(report), indent, 0) + "\n"


def build(command: str, candidate: dict, verdict, necessary=None, search=None, config=None,
          timings: dict | None = None) -> dict:
    parts = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "candidate": candidate,
        "verdict": verdict.to_dict(),
        "necessary": necessary.to_dict() if necessary is not None else None,
        "search": search.to_dict() if search is not None else None,
        "config_echo": config.as_dict() if config is not None else None,
        "timings": {k: round(float(v), 3) for k, v in (timings or {}).items()},
    }
    return {k: parts[k] for k in _ORDER}


def without_timings(text: str) -> dict:
    """Parsed report with the timings field dropped, for comparisons."""
    data = json.loads(text)
    data.pop("timings", None)
    return data


def load_schema() -> dict:
    return json.loads(resources.files("metricline").joinpath("schema/report.schema.json").read_text("utf-8"))
