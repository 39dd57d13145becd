"""Stable output formats: CSV trajectories and JSON reports.

Every artifact self-describes with the tool version, a hash of the full
run configuration, and its column schema.  Floats are written with
round-trip precision so outputs are byte-identical for identical
(config, seed) and re-readable without loss.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

from . import __version__

TRAJECTORY_SCHEMA = ("t", "zeta", "mu", "theta", "lambda", "gnorm",
                     "a1p", "a1m", "a2p", "a2m", "energy")


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, columns: dict, config: dict, schema=None):
    """Write named columns with a provenance comment header."""
    schema = tuple(schema or columns.keys())
    cols = [np.asarray(columns[k]) for k in schema]
    length = len(cols[0])
    if any(len(c) != length for c in cols):
        raise ValueError("columns must have equal length")
    lines = [
        f"# bubblelab {__version__}",
        f"# config_hash: {config_hash(config)}",
        f"# schema: {','.join(schema)}",
        ",".join(schema),
    ]
    for i in range(length):
        lines.append(",".join(_fmt(c[i]) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Read a bubblelab CSV; returns (meta dict, dict of float arrays)."""
    meta, header, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if ":" in line:
                    key, val = line[1:].split(":", 1)
                    meta[key.strip()] = val.strip()
                elif line.startswith("# bubblelab"):
                    meta["version"] = line.split()[-1]
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(x) for x in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no data header found")
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise ValueError(f"{path}: no data rows")
    return meta, {k: data[:, i] for i, k in enumerate(header)}


def write_json(path, payload: dict, config: dict):
    doc = {
        "tool": f"bubblelab {__version__}",
        "config_hash": config_hash(config),
        "config": config,
        "report": payload,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def trajectory_columns(record) -> dict:
    cols = record.columns()
    return {
        "t": cols["t"], "zeta": cols["zeta"], "mu": cols["mu"],
        "theta": cols["theta"], "lambda": cols["lam"], "gnorm": cols["gnorm"],
        "a1p": cols["a1p"], "a1m": cols["a1m"], "a2p": cols["a2p"],
        "a2m": cols["a2m"], "energy": cols["energy"],
    }


def weight_profile_columns(weight, r) -> dict:
    d = weight.derivs(r)
    return {
        "r": r, "q": d[0], "dq": d[1],
        "lapq": weight.laplacian(r), "bilapq": weight.bilaplacian(r),
    }
