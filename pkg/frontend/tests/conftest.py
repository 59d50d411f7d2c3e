import subprocess

import pytest
import yaml


@pytest.fixture(scope="session")
def trace_dir(tmp_path_factory):
    """Small simulator runs produced through the CLI only (no imports from
    the simulator package): three seeds of the linear-loss preset plus one
    norm-power cell, at reduced round counts."""
    root = tmp_path_factory.mktemp("traces")
    out = root / "out"

    base = {
        "name": "lin",
        "algorithm": "constrained",
        "rounds": 2000,
        "seed": 100,
        "body": {"dim": 2, "radius": 1.0},
        "loss": {"kind": "linear", "theta": [1.0, 0.0]},
        "noise": {"kind": "vanishing", "base": "gaussian", "sigma0": 1.0},
        "schedule": {"sigma": 0.0707, "lam": 0.05, "eta": 2.0, "gamma": 1.0},
    }
    spec_path = root / "lin.yaml"
    spec_path.write_text(yaml.safe_dump(base))
    for off in range(3):
        subprocess.run(
            ["vnbandit", "run", str(spec_path), "--out", str(out),
             "--seed-offset", str(off)],
            check=True, capture_output=True, text=True,
        )

    pw = dict(base, name="pow", rounds=2000,
              loss={"kind": "power_norm", "beta": 1.0, "ell": 1.5, "p": 2.0,
                    "x_star": [0.3, -0.4]},
              schedule={"sigma": 0.0707, "lam": 0.05, "eta": 0.5, "gamma": 0.0})
    pw_path = root / "pow.yaml"
    pw_path.write_text(yaml.safe_dump(pw))
    subprocess.run(["vnbandit", "run", str(pw_path), "--out", str(out)],
                   check=True, capture_output=True, text=True)

    return {
        "lin": [str(out / f"lin_seed{100 + off}.csv") for off in range(3)],
        "pow": [str(out / "pow_seed100.csv")],
        "out": str(out),
    }
