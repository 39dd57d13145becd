"""Readers for the documented bubblelab output formats.

CSV files carry comment headers `# bubblelab <version>`, `# config_hash: ...`
and `# schema: ...`, then a column-name row and round-trip float rows.
JSON reports are wrapped as {"tool", "config_hash", "config", "report"}.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    pass


def read_csv(path):
    """Return (meta, columns) for a bubblelab CSV."""
    meta, header, rows = {}, None, []
    text = Path(path).read_text()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, val = body.split(":", 1)
                meta[key.strip()] = val.strip()
            elif body.startswith("bubblelab"):
                meta["tool"] = body
            continue
        if header is None:
            header = line.split(",")
            continue
        try:
            rows.append([float(x) for x in line.split(",")])
        except ValueError as exc:
            raise SchemaError(f"{path}: bad data row {line!r}") from exc
    if header is None or not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] != len(header):
        raise SchemaError(f"{path}: ragged rows")
    return meta, {k: data[:, i] for i, k in enumerate(header)}


def read_report(path):
    """Return (meta, report) for a bubblelab JSON report."""
    try:
        doc = json.loads(Path(path).read_text())
        meta = {"tool": doc["tool"], "config_hash": doc["config_hash"]}
        return meta, doc["report"]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: not a bubblelab report: {exc}") from exc


def require_columns(cols, needed, path=""):
    missing = [k for k in needed if k not in cols]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")


def check_same_config(metas, paths):
    """Overlays must come from identical configurations."""
    hashes = {m.get("config_hash") for m in metas}
    if len(hashes) > 1:
        raise SchemaError(f"config_hash mismatch across overlay inputs {list(paths)}")
