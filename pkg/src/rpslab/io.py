"""Byte-stable CSV and JSON writers.

Floats are written with ``repr``, Python's shortest round-trip decimal form,
so identical runs on one platform give identical files.  Every CSV starts
with ``# key: value`` header lines (version, seed, config digest, ...)
followed by a column header row; lines end with ``\\n`` and files are UTF-8.
"""

import json
import math
import os

import numpy as np

from . import __version__


def fmt(x, precision=None):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if precision is not None and math.isfinite(x):
        return f"{x:.{precision}g}"
    return repr(x)


def write_csv(path, columns, rows, meta=None, precision=None):
    """Write ``rows`` (an iterable of sequences, or a 2-D array) under ``columns``."""
    head = {"version": __version__, **(meta or {})}
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k in sorted(head):
            fh.write(f"# {k}: {head[k] if not isinstance(head[k], float) else fmt(head[k])}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v, precision) for v in row) + "\n")


def read_csv(path):
    """(meta, columns, float array) from a file written by :func:`write_csv`."""
    meta, body = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\n").partition(": ")
                meta[k] = v
            else:
                body.append(line.rstrip("\n"))
    columns = body[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]], dtype=float)
    return meta, columns, data.reshape(-1, len(columns))


def _clean(obj):
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
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None   # JSON has no nan/inf
    return obj


def dumps_json(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))
