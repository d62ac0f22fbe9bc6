"""Deterministic JSON/CSV writers that stamp every artifact with its provenance header."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION
from .wkb import NORMALIZATION


def _clean(obj):
    """Convert numpy scalars and arrays; non-finite floats become strings so JSON stays valid."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(float(obj.real)), "im": _clean(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def header(cfg_hash: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "config_hash": cfg_hash, "normalization": NORMALIZATION}


def dumps(payload: dict, cfg_hash: str) -> str:
    doc = {"meta": header(cfg_hash), **_clean(payload)}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_json(path, payload: dict, cfg_hash: str) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(payload, cfg_hash))
    return p


def write_csv(path, columns: dict, cfg_hash: str) -> Path:
    """Columns of equal length; metadata goes in leading ``#`` comment lines."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.asarray(columns[k]).ravel() for k in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("CSV columns differ in length")
    buf = _io.StringIO()
    for k, v in header(cfg_hash).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(n):
        w.writerow([_fmt(c[i]) for c in cols])
    p.write_text(buf.getvalue())
    return p


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_csv(path) -> dict:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    names, body = rows[0], rows[1:]
    return {k: np.array([float(r[i]) for r in body]) for i, k in enumerate(names)}
