"""Trace tables and their on-disk format.

One run produces <name>.csv (per-round rows, LF line endings, floats at 17
significant digits) and <name>.meta.json (spec, schedule, counters, schema
version).  Action and mean coordinates are logged only for dim <= 4.
"""
from __future__ import annotations

import dataclasses
import json
import os
from typing import Any, Dict, List, Optional

import numpy as np

SCHEMA_VERSION = 1
MAX_LOGGED_DIM = 4
FLOAT_FMT = "%.17g"

BASE_COLUMNS = [
    "t",
    "y",
    "z",
    "ratio",
    "clamped",
    "repairs",
    "lambda_min",
    "lambda_max",
    "dist_to_opt",
    "loss_real",
    "regret_cum",
    "potential",
]


@dataclasses.dataclass
class Trace:
    """Column-major run record plus its metadata mapping."""

    columns: Dict[str, np.ndarray]
    meta: Dict[str, Any]

    def __len__(self) -> int:
        return len(self.columns["t"])

    @property
    def dim(self) -> int:
        return int(self.meta["dim"])


def trace_columns(dim: int) -> List[str]:
    cols = list(BASE_COLUMNS)
    if dim <= MAX_LOGGED_DIM:
        cols += [f"mu_{i}" for i in range(dim)]
        cols += [f"x_{i}" for i in range(dim)]
    return cols


def write_trace(trace: Trace, path_base: str) -> None:
    """Write path_base + '.csv' and path_base + '.meta.json'."""
    cols = trace_columns(trace.dim)
    n = len(trace)
    os.makedirs(os.path.dirname(os.path.abspath(path_base)), exist_ok=True)
    with open(path_base + ".csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        arrays = [np.asarray(trace.columns[c]) for c in cols]
        for i in range(n):
            row = []
            for c, arr in zip(cols, arrays):
                v = arr[i]
                if c in ("t", "clamped", "repairs"):
                    row.append(str(int(v)))
                else:
                    row.append(FLOAT_FMT % float(v))
            fh.write(",".join(row) + "\n")
    meta = dict(trace.meta)
    meta["schema_version"] = SCHEMA_VERSION
    meta["rows"] = n
    with open(path_base + ".meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_trace(path_base: str) -> Trace:
    """Inverse of write_trace; accepts the .csv path or the bare base path."""
    if path_base.endswith(".csv"):
        path_base = path_base[:-4]
    with open(path_base + ".meta.json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"trace schema {meta.get('schema_version')} != supported {SCHEMA_VERSION}"
        )
    data = np.genfromtxt(path_base + ".csv", delimiter=",", names=True)
    cols = {name: np.asarray(data[name]) for name in data.dtype.names}
    return Trace(columns=cols, meta=meta)
