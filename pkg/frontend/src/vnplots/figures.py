"""Figure construction.

Every figure is a pure function of its input files and the spec: the data
that ends up on the axes is exactly what the CSVs contain (plus per-figure
seed means, which the figure contract asks for).  No statistic is fitted
here; fitted slopes enter only through summary CSVs.
"""
from __future__ import annotations

import dataclasses
import json
import os
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .schema import SchemaError, read_summary_csv, read_trace_csv  # noqa: E402

KINDS = ("RegretCurve", "DistanceLogLog", "PrecisionGrowth", "SweepSlopes")


@dataclasses.dataclass(frozen=True)
class FigureSpec:
    inputs: List[str]
    kind: str
    output: str
    reference_slopes: List[float] = dataclasses.field(default_factory=list)
    title: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; known: {KINDS}")
        if not self.inputs:
            raise SchemaError("figure needs at least one input file")
        for path in self.inputs:
            if not os.path.exists(path):
                raise SchemaError(f"input file not found: {path}")


def load_figure_spec(path: str) -> FigureSpec:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    known = {f.name for f in dataclasses.fields(FigureSpec)}
    extra = set(doc) - known
    if extra:
        raise SchemaError(f"unknown figure spec fields: {sorted(extra)}")
    return FigureSpec(**doc)


def _geomean(series: Sequence[np.ndarray]) -> np.ndarray:
    stack = np.stack([np.maximum(s, 1e-300) for s in series])
    return np.exp(np.mean(np.log(stack), axis=0))


def _guides(ax, t: np.ndarray, anchor: np.ndarray, slopes: Sequence[float]) -> None:
    """Dashed power-law guide lines through the anchor curve's tail start."""
    if len(t) == 0:
        return
    i0 = int(np.searchsorted(t, 0.1 * t[-1]))
    i0 = min(i0, len(t) - 1)
    t0, v0 = t[i0], anchor[i0]
    tail = t[i0:]
    for s in slopes:
        ax.plot(tail, v0 * (tail / t0) ** s, ls="--", lw=1.0, color="0.4",
                label=f"slope {s:g}")


def build_figure(spec: FigureSpec):
    """Return the matplotlib Figure for a spec (not yet written to disk)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if spec.kind == "SweepSlopes":
        summary = read_summary_csv(spec.inputs[0])
        target = np.asarray(summary["target"], float)
        slope = np.asarray(summary["slope"], float)
        ax.scatter(target, slope, zorder=3, label="fitted")
        for x, y, lab in zip(target, slope, summary["label"]):
            ax.annotate(lab, (x, y), textcoords="offset points", xytext=(4, 4),
                        fontsize=8)
        lo = min(float(target.min()), float(slope.min()))
        hi = max(float(target.max()), float(slope.max()))
        pad = 0.1 * max(hi - lo, 1e-6)
        ends = np.array([lo - pad, hi + pad])
        ax.plot(ends, ends, ls="--", color="0.4", label="y = x")
        ax.set_xlabel("theoretical slope")
        ax.set_ylabel("fitted slope")
    else:
        column = {
            "RegretCurve": "regret_cum",
            "DistanceLogLog": "dist_to_opt",
            "PrecisionGrowth": "lambda_min",
        }[spec.kind]
        traces = [read_trace_csv(p) for p in spec.inputs]
        t = traces[0]["t"]
        for tr, path in zip(traces, spec.inputs):
            if len(tr["t"]) != len(t):
                raise SchemaError(f"{path}: input lengths differ across traces")
        series = [tr[column] for tr in traces]
        if spec.kind == "RegretCurve":
            for path, v in zip(spec.inputs, series):
                ax.plot(t, v, lw=0.8, alpha=0.6,
                        label=os.path.splitext(os.path.basename(path))[0])
            if len(series) > 1:
                ax.plot(t, np.mean(np.stack(series), axis=0), lw=1.8,
                        color="k", label="mean")
            ax.set_xlabel("round")
        else:
            for path, v in zip(spec.inputs, series):
                ax.plot(t, v, lw=0.6, alpha=0.35,
                        label=os.path.splitext(os.path.basename(path))[0])
            center = _geomean(series)
            ax.plot(t, center, lw=1.8, color="k", label="geometric mean")
            _guides(ax, t, center, spec.reference_slopes)
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel("round")
        ax.set_ylabel(column)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Build the figure and write it to spec.output (PNG or SVG)."""
    fig = build_figure(spec)
    out_dir = os.path.dirname(os.path.abspath(spec.output))
    os.makedirs(out_dir, exist_ok=True)
    fig.savefig(spec.output, dpi=150, metadata={"Software": None}
                if spec.output.endswith(".png") else None)
    plt.close(fig)
    return spec.output
