"""Figure rendering for vanishing-noise bandit experiment traces."""

from .figures import FigureSpec, build_figure, load_figure_spec, render
from .schema import SchemaError, read_summary_csv, read_trace_csv

__all__ = [
    "FigureSpec",
    "SchemaError",
    "build_figure",
    "load_figure_spec",
    "read_summary_csv",
    "read_trace_csv",
    "render",
]

__version__ = "0.1.0"
