"""Power-law slope fits on trace series.

A rate claim "v_t ~ t^s" is checked by ordinary least squares of log v on
log t over a tail window, after geometric-mean aggregation across seeds so
one noisy seed cannot dominate the fit.
"""
from __future__ import annotations

import dataclasses
import math
from typing import List, Sequence, Tuple

import numpy as np


@dataclasses.dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    stderr: float
    n_points: int
    window: Tuple[float, float]


def geometric_mean_series(series: Sequence[np.ndarray], floor: float = 1e-300) -> np.ndarray:
    """Pointwise geometric mean of equal-length positive series."""
    stack = np.stack([np.maximum(np.asarray(s, float), floor) for s in series])
    return np.exp(np.mean(np.log(stack), axis=0))


def fit_power_law(
    t: np.ndarray,
    series: Sequence[np.ndarray],
    window: Tuple[float, float] = (0.1, 1.0),
) -> FitResult:
    """Fit log(geomean(series)) ~ slope * log t + intercept on the sub-range
    of rounds with t in [window[0] * max t, window[1] * max t]."""
    t = np.asarray(t, dtype=float)
    v = geometric_mean_series(series)
    lo, hi = window
    if not (0.0 <= lo < hi <= 1.0):
        raise ValueError("window must satisfy 0 <= lo < hi <= 1")
    tmax = float(t[-1])
    mask = (t >= lo * tmax) & (t <= hi * tmax) & (v > 0)
    if int(mask.sum()) < 8:
        raise ValueError("window leaves too few points to fit")
    x = np.log(t[mask])
    y = np.log(v[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(len(x) - 2, 1)
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(resid ** 2)) / dof / sxx) if sxx > 0 else math.inf
    return FitResult(
        slope=float(slope),
        intercept=float(intercept),
        stderr=stderr,
        n_points=int(mask.sum()),
        window=(lo, hi),
    )
