"""Self-describing CSV/JSON result files, written atomically."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Any, Sequence

import numpy as np

from . import __version__

SCHEMA_VERSION = 1


def plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe Python values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def header(command: str, seed: int, config: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "fpplab",
        "version": __version__,
        "command": command,
        "seed": int(seed),
        "config": plain(config),
    }


def render_json(head: dict, status: str, result: dict, rows: Sequence[dict]) -> str:
    doc = dict(head)
    doc["status"] = status
    doc["result"] = plain(result)
    doc["rows"] = plain(list(rows))
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cell(v: Any) -> str:
    v = plain(v)
    if v is None:
        return "nan"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def render_csv(head: dict, status: str, result: dict, rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    """``#``-prefixed metadata lines, then the table.

    Without rows the scalar entries of ``result`` become a key/value table.
    """
    buf = io.StringIO()
    meta = dict(head)
    meta["status"] = status
    for k in sorted(meta):
        buf.write(f"# {k}: {json.dumps(plain(meta[k]), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    if rows:
        cols = list(columns) if columns else list(rows[0].keys())
        writer.writerow(cols)
        for r in rows:
            writer.writerow([_cell(r.get(c)) for c in cols])
    else:
        writer.writerow(["key", "value"])
        for k in sorted(result):
            writer.writerow([k, _cell(result[k])])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".fpplab-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def payload(text: str) -> str:
    """The data part of a rendered file (CSV metadata lines dropped)."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("# "))
