"""Byte-stable JSON/CSV output: 12 significant digits, sorted keys, LF."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

SIG_DIGITS = 12


def fmt_float(x: float) -> str:
    return format(_round(float(x)), f".{SIG_DIGITS}g")


def _round(x: float) -> float:
    if not math.isfinite(x):
        raise ValueError(f"refusing to serialize non-finite value {x}")
    r = float(format(x, f".{SIG_DIGITS}g"))
    return 0.0 if r == 0 else r


def canonical(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and round floats."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=1, ensure_ascii=False,
                      allow_nan=False) + "\n"


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8", newline="\n")
    return path


def write_csv(path: str | Path, header: list[str], rows, comment: dict | None = None) -> Path:
    """Plain CSV; ``comment`` is emitted as a leading ``# {json}`` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if comment is not None:
        lines.append("# " + json.dumps(canonical(comment), sort_keys=True, ensure_ascii=False))
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    s = str(v)
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s
