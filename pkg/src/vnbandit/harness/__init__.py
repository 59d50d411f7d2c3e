"""Experiment harness: configs, trace files, slope fits, verification."""

from .config import ExperimentSpec, load_spec, dump_spec
from .traces import Trace, write_trace, read_trace, SCHEMA_VERSION
from .fitting import FitResult, fit_power_law
from .runner import run_experiment, run_sweep
from .verify import VerifyReport, verify_lemmas

__all__ = [
    "ExperimentSpec",
    "load_spec",
    "dump_spec",
    "Trace",
    "write_trace",
    "read_trace",
    "SCHEMA_VERSION",
    "FitResult",
    "fit_power_law",
    "run_experiment",
    "run_sweep",
    "VerifyReport",
    "verify_lemmas",
]
