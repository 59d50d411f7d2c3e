"""Experiment specification and its YAML round trip.

A spec is a plain nested mapping; every field that reaches a float is kept as
a Python float so load(dump(spec)) == spec exactly.
"""
from __future__ import annotations

import dataclasses
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from ..geometry import ConvexBody, GeometryError
from ..environment import Environment, LossSpec, NoiseSpec, PairwiseDifferenceEnvironment
from ..solver import (
    BetaEll,
    BetaOne,
    ConstantSchedule,
    QG,
    practical_constants,
    theoretical_constants,
)


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one run (or one sweep cell)."""

    name: str
    algorithm: str
    rounds: int
    seed: int
    body: Dict[str, Any]
    loss: Dict[str, Any]
    noise: Dict[str, Any]
    schedule: Dict[str, Any]
    pairwise: bool = False
    extension: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ExperimentSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise GeometryError(f"unknown spec fields: {sorted(extra)}")
        missing = {f.name for f in dataclasses.fields(cls) if f.default is dataclasses.MISSING
                   and f.default_factory is dataclasses.MISSING} - set(d)
        if missing:
            raise GeometryError(f"missing spec fields: {sorted(missing)}")
        return cls(**d)

    # Materialization ------------------------------------------------------

    def build_body(self) -> ConvexBody:
        b = self.body
        if b.get("kind", "ball") == "whole":
            return ConvexBody.whole_space(int(b["dim"]))
        center = np.asarray(b.get("center", [0.0] * int(b["dim"])), float)
        return ConvexBody.ball(center, float(b.get("radius", 1.0)))

    def build_loss(self) -> LossSpec:
        body = self.build_body()
        l = dict(self.loss)
        kind = l.pop("kind")
        if kind == "linear":
            return LossSpec(kind="linear", body=body, theta=np.asarray(l["theta"], float))
        if kind == "power_norm":
            xs = l.get("x_star")
            return LossSpec(
                kind="power_norm",
                body=body,
                beta=float(l.get("beta", 1.0)),
                ell=float(l.get("ell", 2.0)),
                p=float(l.get("p", 2.0)),
                x_star=None if xs is None else np.asarray(xs, float),
                offset=float(l.get("offset", 0.0)),
            )
        if kind == "quadratic":
            xs = l.get("x_star")
            return LossSpec(
                kind="quadratic",
                body=body,
                matrix=np.asarray(l["matrix"], float),
                x_star=None if xs is None else np.asarray(xs, float),
                offset=float(l.get("offset", 0.0)),
            )
        raise GeometryError(f"unknown loss kind {kind!r}")

    def build_noise(self) -> NoiseSpec:
        n = dict(self.noise)
        return NoiseSpec(
            kind=n.get("kind", "vanishing"),
            base=n.get("base", "gaussian"),
            sigma0=float(n.get("sigma0", 1.0)),
        )

    def build_environment(self, seed_offset: int = 0):
        env = Environment(
            self.build_loss(),
            self.build_noise(),
            seed=self.seed + 1_000_003 * (seed_offset + 1),
            extension_mode=self.extension.get("mode", "plain"),
            alpha=float(self.extension.get("alpha", 0.0)),
            margin=float(self.extension.get("margin", 0.0)),
        )
        if self.pairwise:
            return PairwiseDifferenceEnvironment(env)
        return env

    def build_schedule(self) -> ConstantSchedule:
        s = dict(self.schedule)
        preset = s.pop("preset", "practical")
        regime = _build_regime(s.pop("regime", None))
        body = self.build_body()
        if preset == "theoretical":
            loss = self.build_loss()
            return theoretical_constants(
                regime,
                dim=body.dim,
                horizon=self.rounds,
                G=loss.lipschitz,
                r=body.inner_radius,
                R=body.outer_radius,
                delta=float(s.get("delta", 0.01)),
                C=float(s.get("C", 1.0)),
                C_prime=float(s.get("C_prime", 1.0)),
            )
        return practical_constants(
            algorithm=self.algorithm,
            dim=body.dim,
            horizon=self.rounds,
            sigma=float(s["sigma"]),
            lam=float(s["lam"]),
            eta=float(s["eta"]),
            gamma=float(s.get("gamma", 0.0)),
            regime=regime,
            delta=float(s.get("delta", 0.01)),
        )


def _build_regime(r: Optional[Dict[str, Any]]):
    if r is None:
        return None
    kind = r.get("kind")
    if kind == "qg":
        return QG(rho=float(r["rho"]))
    if kind == "beta_ell":
        return BetaEll(beta=float(r["beta"]), ell=float(r["ell"]))
    if kind == "beta_one":
        return BetaOne(beta=float(r["beta"]), kappa=float(r["kappa"]))
    raise GeometryError(f"unknown regime kind {kind!r}")


# YAML round trip -----------------------------------------------------------

def load_spec(path: str) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentSpec.from_dict(yaml.safe_load(fh))


def dump_spec(spec: ExperimentSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(spec.to_dict(), fh, sort_keys=False, default_flow_style=False)


def load_sweep(path: str) -> Dict[str, Any]:
    """A sweep file holds a base spec plus 'sweep: {seeds: [...], cells: [...]}'
    where each cell is a partial override of the base mapping."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if "sweep" not in doc:
        raise GeometryError("sweep file needs a 'sweep' section")
    return doc


def merge_overrides(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge_overrides(out[k], v)
        else:
            out[k] = v
    return out
