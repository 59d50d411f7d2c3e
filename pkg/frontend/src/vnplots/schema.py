"""Reading the simulator's on-disk outputs.

This package talks to the simulator only through its documented external
formats:

  trace CSV     header row, one row per round; always carries the columns in
                TRACE_COLUMNS (plus mu_i / x_i coordinate columns for small
                dimensions, which figures ignore).
  summary CSV   header ``label,target,slope`` -- one fitted slope per sweep
                cell, as produced by ``plots collect`` from the simulator's
                ``fit`` subcommand.

Nothing here imports the simulator package.
"""
from __future__ import annotations

from typing import Dict, List

import numpy as np

TRACE_COLUMNS = [
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

SUMMARY_COLUMNS = ["label", "target", "slope"]


class SchemaError(ValueError):
    """An input file does not match the documented CSV layout."""


def read_trace_csv(path: str) -> Dict[str, np.ndarray]:
    """Load a per-round trace; raises SchemaError naming any missing column."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = list(data.dtype.names or [])
    for col in TRACE_COLUMNS:
        if col not in names:
            raise SchemaError(f"{path}: missing trace column {col!r}")
    return {name: np.atleast_1d(np.asarray(data[name], float)) for name in names}


def read_summary_csv(path: str) -> Dict[str, list]:
    """Load a sweep summary: label (str), target (float), slope (float)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise SchemaError(f"{path}: empty summary file")
    header = [c.strip() for c in lines[0].split(",")]
    for col in SUMMARY_COLUMNS:
        if col not in header:
            raise SchemaError(f"{path}: missing summary column {col!r}")
    idx = {c: header.index(c) for c in SUMMARY_COLUMNS}
    out: Dict[str, List] = {"label": [], "target": [], "slope": []}
    for ln in lines[1:]:
        parts = [c.strip() for c in ln.split(",")]
        out["label"].append(parts[idx["label"]])
        out["target"].append(float(parts[idx["target"]]))
        out["slope"].append(float(parts[idx["slope"]]))
    return out
