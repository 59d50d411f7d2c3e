"""Command line interface.

    vnbandit run <spec.yaml> [--out DIR] [--seed-offset N]
    vnbandit sweep <sweep.yaml> [--out DIR] [--workers N]
    vnbandit verify [--checks a,b,...] [--budget N] [--seed N]
    vnbandit fit <trace.csv> [...] --column NAME [--window LO HI]

Artifacts land under --out, else $VNBANDIT_OUT, else ./out.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from .config import ExperimentSpec, load_spec, load_sweep
from .fitting import fit_power_law
from .runner import output_root, run_experiment, run_sweep
from .traces import Trace, read_trace, write_trace
from .verify import available_checks, verify_lemmas


def _cmd_run(args: argparse.Namespace) -> int:
    spec = load_spec(args.spec)
    trace = run_experiment(spec, seed_offset=args.seed_offset)
    out = args.out or output_root()
    base = os.path.join(out, f"{spec.name}_seed{spec.seed + args.seed_offset}")
    write_trace(trace, base)
    print(f"wrote {base}.csv ({len(trace)} rows)")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    doc = load_sweep(args.sweep)
    results = run_sweep(doc, workers=args.workers)
    out = args.out or output_root()
    for name, offset, trace in results:
        base = os.path.join(out, f"{name}_seed{trace.meta['seed'] + offset}")
        write_trace(trace, base)
        print(f"wrote {base}.csv ({len(trace)} rows)")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    checks = args.checks.split(",") if args.checks else None
    report = verify_lemmas(checks=checks, budget=args.budget, seed=args.seed)
    print(report.summary())
    if args.json:
        out = args.out or output_root()
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "verify_report.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump([r.__dict__ for r in report.rows], fh, indent=2)
            fh.write("\n")
        print(f"wrote {path}")
    return 0 if report.all_passed else 1


def _cmd_fit(args: argparse.Namespace) -> int:
    series = []
    t = None
    for path in args.traces:
        trace = read_trace(path)
        if args.column not in trace.columns:
            print(f"column {args.column!r} not in {path}", file=sys.stderr)
            return 2
        series.append(trace.columns[args.column])
        t = trace.columns["t"]
    fit = fit_power_law(t, series, window=(args.window[0], args.window[1]))
    print(
        f"column={args.column} slope={fit.slope:.6g} intercept={fit.intercept:.6g} "
        f"stderr={fit.stderr:.3g} points={fit.n_points} window={fit.window}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vnbandit", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute one experiment spec")
    p.add_argument("spec")
    p.add_argument("--out", default=None)
    p.add_argument("--seed-offset", type=int, default=0)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="execute every cell x seed of a sweep file")
    p.add_argument("sweep")
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("verify", help="run the verification battery")
    p.add_argument("--checks", default=None,
                   help=f"comma list from: {','.join(available_checks())}")
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="also write a JSON report")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("fit", help="fit a power-law slope over trace files")
    p.add_argument("traces", nargs="+")
    p.add_argument("--column", required=True)
    p.add_argument("--window", type=float, nargs=2, default=[0.1, 1.0])
    p.set_defaults(fn=_cmd_fit)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
