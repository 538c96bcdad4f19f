"""CSV and JSON writers shared by the CLI and the acceptance suite."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def to_json(obj) -> str:
    """Deterministic JSON text: sorted keys, numpy values unwrapped, inf as string."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: _plain(v) for k, v in row.items()})
    return buf.getvalue()


def emit(text: str, path: str | Path | None) -> None:
    """Write to ``path``, or stdout when path is None or '-'."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def write_rows(rows, columns, path, fmt: str = "csv") -> None:
    if fmt == "csv":
        emit(to_csv(rows, columns), path)
    elif fmt == "json":
        emit(to_json([{c: r.get(c) for c in columns} for r in rows]), path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
