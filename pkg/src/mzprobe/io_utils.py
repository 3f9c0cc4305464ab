"""Deterministic result files: CSV tables and JSON payloads.

Numbers are written with 9 significant digits, rows end in LF on every
platform, and JSON keys are sorted, so byte-identical inputs give
byte-identical files. Non-finite floats are not representable in strict
JSON and become null.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path


def format_number(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return f"{value:.8e}"
    return str(value)


def scrub(obj):
    """Replace non-finite floats with None, recursively; tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: scrub(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [scrub(v) for v in obj]
    return obj


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(scrub(payload), indent=2, sort_keys=True, ensure_ascii=False,
                      allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_csv(path, header, rows, comments=()) -> Path:
    """Write a comma-separated table; comment lines start with '#'."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    return path
