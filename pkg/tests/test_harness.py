import json
import math
import os

import numpy as np
import pytest
import yaml

from vnbandit.geometry import GeometryError
from vnbandit.harness.cli import main as cli_main
from vnbandit.harness.config import (
    ExperimentSpec,
    dump_spec,
    load_spec,
    load_sweep,
    merge_overrides,
)
from vnbandit.harness.fitting import fit_power_law, geometric_mean_series
from vnbandit.harness.runner import output_root, run_experiment, run_sweep
from vnbandit.harness.traces import (
    SCHEMA_VERSION,
    Trace,
    read_trace,
    trace_columns,
    write_trace,
)


def _spec_dict(**over):
    d = {
        "name": "tiny-linear",
        "algorithm": "constrained",
        "rounds": 40,
        "seed": 7,
        "body": {"kind": "ball", "dim": 2, "center": [0.0, 0.0], "radius": 1.0},
        "loss": {"kind": "linear", "theta": [1.0, 0.0]},
        "noise": {"kind": "vanishing", "base": "gaussian", "sigma0": 1.0},
        "schedule": {"sigma": 0.1, "lam": 0.05, "eta": 1.0, "gamma": 1.0,
                     "regime": {"kind": "qg", "rho": 1.0}},
    }
    d.update(over)
    return d


# Spec round trip -----------------------------------------------------------

def test_spec_dict_round_trip():
    spec = ExperimentSpec.from_dict(_spec_dict())
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec


def test_spec_yaml_round_trip_lossless(tmp_path):
    # awkward floats must survive dump/load exactly
    d = _spec_dict()
    d["schedule"]["sigma"] = 1.0 / 3.0
    d["schedule"]["eta"] = math.pi
    d["loss"]["theta"] = [0.1 + 0.2, -7.0]
    spec = ExperimentSpec.from_dict(d)
    path = str(tmp_path / "spec.yaml")
    dump_spec(spec, path)
    assert load_spec(path) == spec


def test_spec_rejects_unknown_and_missing_fields():
    with pytest.raises(GeometryError, match="unknown"):
        ExperimentSpec.from_dict(_spec_dict(bogus=1))
    d = _spec_dict()
    del d["schedule"]
    with pytest.raises(GeometryError, match="missing"):
        ExperimentSpec.from_dict(d)


def test_build_environment_seed_depends_on_offset():
    spec = ExperimentSpec.from_dict(_spec_dict())
    x = np.array([0.3, 0.1])
    y0 = spec.build_environment(0).query(x)
    y0b = spec.build_environment(0).query(x)
    y1 = spec.build_environment(1).query(x)
    assert y0 == y0b
    assert y0 != y1


def test_merge_overrides_nested():
    base = {"a": 1, "loss": {"kind": "power_norm", "ell": 1.5}, "seed": 0}
    out = merge_overrides(base, {"loss": {"ell": 2.0}, "name": "cell"})
    assert out == {"a": 1, "loss": {"kind": "power_norm", "ell": 2.0},
                   "seed": 0, "name": "cell"}
    assert base["loss"]["ell"] == 1.5  # untouched


# Traces --------------------------------------------------------------------

def _toy_trace(n=10, dim=2):
    rng = np.random.default_rng(0)
    cols = {}
    for name in trace_columns(dim):
        if name == "t":
            cols[name] = np.arange(1, n + 1, dtype=float)
        elif name in ("clamped", "repairs"):
            cols[name] = np.zeros(n)
        else:
            cols[name] = rng.standard_normal(n) * 10.0 ** rng.integers(-8, 8)
    return Trace(columns=cols, meta={"name": "toy", "dim": dim, "rounds": n})


def test_trace_round_trip_exact(tmp_path):
    trace = _toy_trace()
    base = str(tmp_path / "runs" / "toy")
    write_trace(trace, base)
    back = read_trace(base)
    assert set(back.columns) == set(trace.columns)
    for name in trace.columns:
        # 17 significant digits round-trips float64 exactly
        assert np.array_equal(back.columns[name], trace.columns[name]), name
    assert back.meta["schema_version"] == SCHEMA_VERSION
    assert back.meta["rows"] == len(trace)


def test_trace_accepts_csv_suffix(tmp_path):
    trace = _toy_trace(n=5)
    base = str(tmp_path / "toy")
    write_trace(trace, base)
    assert len(read_trace(base + ".csv")) == 5


def test_trace_schema_mismatch_rejected(tmp_path):
    trace = _toy_trace(n=5)
    base = str(tmp_path / "toy")
    write_trace(trace, base)
    meta = json.load(open(base + ".meta.json"))
    meta["schema_version"] = SCHEMA_VERSION + 1
    json.dump(meta, open(base + ".meta.json", "w"))
    with pytest.raises(ValueError, match="schema"):
        read_trace(base)


def test_high_dim_trace_omits_coordinates():
    assert "mu_0" in trace_columns(4)
    assert "mu_0" not in trace_columns(5)
    assert "x_0" not in trace_columns(5)


# Fitting -------------------------------------------------------------------

def test_fit_recovers_exact_power_law():
    t = np.arange(1, 2001, dtype=float)
    fit = fit_power_law(t, [3.0 * t ** -1.5])
    assert fit.slope == pytest.approx(-1.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert fit.stderr < 1e-12


def test_fit_window_restricts_points():
    t = np.arange(1, 101, dtype=float)
    # kink at t = 50: earlier slope 0, later slope -1; a late window sees -1
    v = np.where(t < 50, 1.0, 50.0 / t)
    fit = fit_power_law(t, [v], window=(0.6, 1.0))
    assert fit.slope == pytest.approx(-1.0, abs=1e-10)
    assert fit.n_points == 41


def test_fit_refuses_starved_window():
    t = np.arange(1, 21, dtype=float)
    with pytest.raises(ValueError, match="few points"):
        fit_power_law(t, [1.0 / t], window=(0.9, 1.0))
    with pytest.raises(ValueError, match="window"):
        fit_power_law(t, [1.0 / t], window=(0.5, 0.2))


def test_geometric_mean_series_oracle():
    a = np.array([1.0, 4.0])
    b = np.array([4.0, 16.0])
    assert np.allclose(geometric_mean_series([a, b]), [2.0, 8.0])
    # zeros are floored rather than poisoning the log
    out = geometric_mean_series([np.array([0.0]), np.array([1.0])])
    assert np.isfinite(out).all()


# Runner --------------------------------------------------------------------

def test_run_experiment_columns_and_meta():
    spec = ExperimentSpec.from_dict(_spec_dict())
    trace = run_experiment(spec)
    assert len(trace) == 40
    assert set(trace.columns) == set(trace_columns(2))
    assert trace.meta["query_count"] == 40
    assert trace.meta["inner_query_count"] == 40
    assert trace.meta["spec"] == spec.to_dict()
    assert trace.meta["schedule"]["lam"] == 0.05
    # per-round regret is nonnegative, so the running sum never decreases
    assert np.all(np.diff(trace.columns["regret_cum"]) >= -1e-12)
    assert np.all(trace.columns["potential"] >= 0.0)
    assert np.all(trace.columns["dist_to_opt"] >= 0.0)


def test_run_experiment_pairwise_doubles_inner_queries():
    d = _spec_dict(pairwise=True)
    d["loss"] = {"kind": "power_norm", "ell": 2.0, "x_star": [0.2, -0.1]}
    d["noise"] = {"kind": "multiplicative"}
    spec = ExperimentSpec.from_dict(d)
    trace = run_experiment(spec)
    assert trace.meta["query_count"] == 40
    assert trace.meta["inner_query_count"] == 80


def test_run_experiment_reproducible():
    spec = ExperimentSpec.from_dict(_spec_dict())
    a = run_experiment(spec)
    b = run_experiment(spec)
    for name in a.columns:
        assert np.array_equal(a.columns[name], b.columns[name]), name


def _sweep_doc(rounds=30):
    return dict(
        _spec_dict(rounds=rounds),
        sweep={"seeds": [0, 1],
               "cells": [{"name": "cell-a"},
                         {"name": "cell-b", "schedule": {"eta": 0.5}}]},
    )


def test_run_sweep_serial_equals_parallel():
    doc = _sweep_doc()
    serial = run_sweep(doc, workers=1)
    parallel = run_sweep(doc, workers=2)
    assert [(n, o) for n, o, _ in serial] == [
        ("cell-a", 0), ("cell-a", 1), ("cell-b", 0), ("cell-b", 1)]
    for (n1, o1, t1), (n2, o2, t2) in zip(serial, parallel):
        assert (n1, o1) == (n2, o2)
        for name in t1.columns:
            assert np.array_equal(t1.columns[name], t2.columns[name])


def test_run_sweep_cell_overrides_apply():
    results = run_sweep(_sweep_doc(), workers=1)
    by_name = {(n, o): t for n, o, t in results}
    assert by_name[("cell-a", 0)].meta["schedule"]["eta"] == 1.0
    assert by_name[("cell-b", 0)].meta["schedule"]["eta"] == 0.5


def test_output_root_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("VNBANDIT_OUT", str(tmp_path / "elsewhere"))
    assert output_root() == str(tmp_path / "elsewhere")
    monkeypatch.delenv("VNBANDIT_OUT")
    assert output_root() == os.path.join(os.getcwd(), "out")


# CLI -----------------------------------------------------------------------

def test_cli_run_and_fit(tmp_path, capsys):
    spec_path = str(tmp_path / "spec.yaml")
    d = _spec_dict(rounds=60)
    with open(spec_path, "w") as fh:
        yaml.safe_dump(d, fh)
    out = str(tmp_path / "out")
    assert cli_main(["run", spec_path, "--out", out]) == 0
    csv_path = os.path.join(out, "tiny-linear_seed7.csv")
    assert os.path.exists(csv_path)
    assert os.path.exists(os.path.join(out, "tiny-linear_seed7.meta.json"))

    assert cli_main(["fit", csv_path, "--column", "lambda_min"]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith("column=lambda_min slope=")

    assert cli_main(["fit", csv_path, "--column", "nope"]) == 2


def test_cli_sweep(tmp_path):
    sweep_path = str(tmp_path / "sweep.yaml")
    with open(sweep_path, "w") as fh:
        yaml.safe_dump(_sweep_doc(rounds=20), fh)
    out = str(tmp_path / "out")
    assert cli_main(["sweep", sweep_path, "--out", out, "--workers", "1"]) == 0
    names = sorted(os.listdir(out))
    assert "cell-a_seed7.csv" in names and "cell-b_seed8.csv" in names


def test_cli_verify_subset(tmp_path, capsys):
    out = str(tmp_path / "out")
    rc = cli_main(["verify", "--checks", "feedback-identity,sequence-induction",
                   "--budget", "2000", "--seed", "1", "--json", "--out", out])
    assert rc == 0
    report = json.load(open(os.path.join(out, "verify_report.json")))
    assert {r["name"] for r in report} == {"feedback-identity", "sequence-induction"}
    assert all(r["passed"] for r in report)


def test_load_sweep_requires_section(tmp_path):
    path = str(tmp_path / "bad.yaml")
    with open(path, "w") as fh:
        yaml.safe_dump(_spec_dict(), fh)
    with pytest.raises(GeometryError, match="sweep"):
        load_sweep(path)
