"""CSV and JSON writers with a provenance header.

CSV files start with ``#`` comment lines carrying the config hash and the
assumptions in force, followed by a column header and data rows. Floats are
written with 12 significant digits and LF line endings, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FLOAT_FORMAT = "{:.12g}"


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        # -0.0 and 0.0 print identically
        return FLOAT_FORMAT.format(v + 0.0)
    text = str(value)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def header_lines(config_hash: str, assumptions: Sequence[str]) -> list[str]:
    lines = [f"# config_sha256: {config_hash}"]
    lines.extend(f"# assumption: {a}" for a in assumptions)
    return lines


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence], config_hash: str,
              assumptions: Sequence[str]) -> Path:
    lines = header_lines(config_hash, assumptions)
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        lines.append(",".join(format_value(v) for v in row))
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no NaN or infinity
        return float(FLOAT_FORMAT.format(v)) if math.isfinite(v) else None
    return obj


def write_json(path: Path, payload: dict, config_hash: str, assumptions: Sequence[str]) -> Path:
    doc = {"_header": {"config_sha256": config_hash, "assumptions": list(assumptions)}}
    doc.update(_jsonable(payload))
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]], list[str]]:
    """Return ``(columns, rows, comments)`` of a file written by :func:`write_csv`."""
    comments, body = [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        (comments if line.startswith("#") else body).append(line)
    columns = body[0].split(",")
    return columns, [row.split(",") for row in body[1:]], comments
