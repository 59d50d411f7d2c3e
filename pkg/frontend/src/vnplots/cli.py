"""Command line entry points.

    plots render <figure_spec.json>
    plots collect <out_summary.csv> --cell LABEL TARGET TRACE [TRACE ...]

``collect`` builds a sweep-summary CSV by delegating each slope fit to the
simulator's own ``fit`` subcommand (``vnbandit fit``), so all statistics
keep a single source of truth.
"""
from __future__ import annotations

import argparse
import re
import subprocess
import sys
from typing import List, Optional

from .figures import load_figure_spec, render

_SLOPE_RE = re.compile(r"slope=([-+0-9.eE]+)")


def _cmd_render(args: argparse.Namespace) -> int:
    spec = load_figure_spec(args.spec)
    path = render(spec)
    print(f"wrote {path}")
    return 0


def _fit_slope(traces: List[str], column: str) -> float:
    proc = subprocess.run(
        ["vnbandit", "fit", *traces, "--column", column],
        capture_output=True, text=True, check=True,
    )
    m = _SLOPE_RE.search(proc.stdout)
    if m is None:
        raise RuntimeError(f"could not parse fit output: {proc.stdout!r}")
    return float(m.group(1))


def _cmd_collect(args: argparse.Namespace) -> int:
    rows = []
    for cell in args.cell:
        label, target, traces = cell[0], float(cell[1]), cell[2:]
        rows.append((label, target, _fit_slope(traces, args.column)))
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,target,slope\n")
        for label, target, slope in rows:
            fh.write(f"{label},{target!r},{slope!r}\n")
    print(f"wrote {args.output} ({len(rows)} cells)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plots", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one figure spec to an image")
    p.add_argument("spec")
    p.set_defaults(fn=_cmd_render)

    p = sub.add_parser("collect", help="build a sweep summary CSV via the simulator's fit command")
    p.add_argument("output")
    p.add_argument("--column", default="lambda_min")
    p.add_argument("--cell", nargs="+", action="append", required=True,
                   metavar="LABEL TARGET TRACE...",
                   help="one sweep cell: label, theoretical slope, trace CSVs")
    p.set_defaults(fn=_cmd_collect)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # CLI surface: report, don't trace back
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
