"""Executing experiment specs and sweeps.

The solver only ever sees env.query; the observer below harvests hidden
per-round diagnostics (distance to optimum, instantaneous regret, the
precision-norm potential) from the environment's side channel after each
round, which is the only place the ground truth crosses into a trace.
"""
from __future__ import annotations

import concurrent.futures
import dataclasses
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .. import solver as solver_mod
from ..solver import ConstantSchedule, SolverState, StepRecord, init, step
from .config import ExperimentSpec, load_sweep, merge_overrides
from .traces import MAX_LOGGED_DIM, Trace, trace_columns


def run_experiment(spec: ExperimentSpec, seed_offset: int = 0) -> Trace:
    """One full run; returns the in-memory trace."""
    env = spec.build_environment(seed_offset)
    schedule = spec.build_schedule()
    body = spec.build_body()
    loss = spec.build_loss()
    n = spec.rounds
    d = body.dim

    cols: Dict[str, np.ndarray] = {
        name: np.empty(n) for name in trace_columns(d)
    }
    log_coords = d <= MAX_LOGGED_DIM

    state = init(schedule, seed=spec.seed + seed_offset)
    regret = 0.0
    fmin = loss.minimum
    x_star = loss.x_star
    for i in range(n):
        P_t = state.precision  # precision in force when round t's action is drawn
        rec = step(state, schedule, env.query, body)
        hidden = env.last_record
        regret += hidden.loss_real - fmin
        diff = rec.mu - x_star
        potential = 0.5 * float(diff @ P_t @ diff)
        cols["t"][i] = rec.t
        cols["y"][i] = rec.y
        cols["z"][i] = rec.z
        cols["ratio"][i] = rec.ratio
        cols["clamped"][i] = float(rec.clamped)
        cols["repairs"][i] = rec.repairs
        cols["lambda_min"][i] = rec.lambda_min
        cols["lambda_max"][i] = rec.lambda_max
        cols["dist_to_opt"][i] = hidden.dist_to_opt
        cols["loss_real"][i] = hidden.loss_real
        cols["regret_cum"][i] = regret
        cols["potential"][i] = potential
        if log_coords:
            for j in range(d):
                cols[f"mu_{j}"][i] = rec.mu[j]
                cols[f"x_{j}"][i] = rec.x[j]

    meta = {
        "name": spec.name,
        "dim": d,
        "rounds": n,
        "seed": spec.seed,
        "seed_offset": seed_offset,
        "spec": spec.to_dict(),
        "schedule": {
            k: (v if not dataclasses.is_dataclass(v) else dataclasses.asdict(v))
            for k, v in dataclasses.asdict(schedule).items()
        },
        "query_count": env.query_count,
        "inner_query_count": getattr(getattr(env, "inner", env), "query_count"),
        "repairs": state.repairs,
        "ratio_clamps": state.clamps,
    }
    return Trace(columns=cols, meta=meta)


def _run_cell(args: Tuple[Dict[str, Any], int]) -> Tuple[str, int, Trace]:
    base, seed_offset = args
    spec = ExperimentSpec.from_dict(base)
    trace = run_experiment(spec, seed_offset=seed_offset)
    return spec.name, seed_offset, trace


def run_sweep(
    doc: Dict[str, Any],
    workers: int = 1,
) -> List[Tuple[str, int, Trace]]:
    """Run every (cell, seed) combination of a sweep document.

    Results come back sorted by (cell name, seed offset) regardless of worker
    scheduling, so downstream aggregation is deterministic.
    """
    sweep = doc["sweep"]
    base = {k: v for k, v in doc.items() if k != "sweep"}
    cells = sweep.get("cells", [{}])
    seeds = sweep.get("seeds", [0])
    jobs = []
    for cell in cells:
        merged = merge_overrides(base, {k: v for k, v in cell.items()})
        for off in seeds:
            jobs.append((merged, int(off)))
    if workers <= 1:
        results = [_run_cell(j) for j in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    results.sort(key=lambda r: (r[0], r[1]))
    return results


def output_root() -> str:
    """Directory all CLI artifacts land in; override with VNBANDIT_OUT."""
    return os.environ.get("VNBANDIT_OUT", os.path.join(os.getcwd(), "out"))
