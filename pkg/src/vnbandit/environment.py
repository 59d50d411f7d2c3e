"""Loss families, noise models, and the bandit environment.

The environment owns the ground truth (minimizer, noise draws).  Its query
method returns only the scalar observation; per-query diagnostics (real
action, distance to the optimum, noise value) go to a hidden side channel
that the harness may read but the solver never sees.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from .geometry import ConvexBody, GeometryError
from .extension import ExtendedLoss, learner_feedback


# Loss specifications -------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class LossSpec:
    """Convex loss on a body, with known minimizer and growth data.

    Kinds:
      linear     f(x) = <x, theta>                      (theta = coeffs)
      power_norm f(x) = beta ||x - x_star||_p^ell + offset
      quadratic  f(x) = 0.5 (x - x_star)^T Q (x - x_star) + offset
    """

    kind: str
    body: ConvexBody
    theta: Optional[np.ndarray] = None
    beta: float = 1.0
    ell: float = 2.0
    p: float = 2.0
    x_star: Optional[np.ndarray] = None
    offset: float = 0.0
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("linear", "power_norm", "quadratic"):
            raise GeometryError(f"unknown loss kind {self.kind!r}")
        if self.kind == "linear":
            th = np.asarray(self.theta, dtype=float)
            if np.all(th == 0.0):
                raise GeometryError("linear loss needs a nonzero direction")
            if self.body.kind != "ball" or np.any(self.body.center != 0.0):
                raise GeometryError("linear loss defined on centered balls")
            object.__setattr__(self, "theta", th)
            object.__setattr__(
                self, "x_star", -self.body.radius * th / np.linalg.norm(th)
            )
        else:
            xs = np.zeros(self.body.dim) if self.x_star is None else np.asarray(self.x_star, float)
            object.__setattr__(self, "x_star", xs)
            if not self.body.contains(xs):
                raise GeometryError("minimizer must lie in the body")
        if self.kind == "power_norm":
            if self.ell < 1.0 or not (1.0 < self.p <= 2.0):
                raise GeometryError("power_norm needs ell >= 1, p in (1, 2]")
        if self.kind == "quadratic":
            Q = np.asarray(self.matrix, dtype=float)
            if np.linalg.eigvalsh(0.5 * (Q + Q.T))[0] <= 0:
                raise GeometryError("quadratic loss needs a PD matrix")
            object.__setattr__(self, "matrix", 0.5 * (Q + Q.T))

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return float(x @ self.theta)
        u = x - self.x_star
        if self.kind == "power_norm":
            nrm = float(np.sum(np.abs(u) ** self.p) ** (1.0 / self.p))
            return self.beta * nrm ** self.ell + self.offset
        return 0.5 * float(u @ self.matrix @ u) + self.offset

    __call__ = value

    @property
    def minimum(self) -> float:
        return self.value(self.x_star)

    @property
    def lipschitz(self) -> float:
        """A Lipschitz constant over the body (or the unit neighborhood of
        x_star for unbounded domains)."""
        if self.kind == "linear":
            return float(np.linalg.norm(self.theta))
        if self.body.kind == "whole":
            span = 1.0 + 1.0  # local constant near the optimum; grows with x
        else:
            span = self.body.outer_radius + float(np.linalg.norm(self.x_star))
        d = self.body.dim
        if self.kind == "power_norm":
            dual = d ** ((2.0 - self.p) / (2.0 * self.p))
            return self.beta * self.ell * (d ** (1.0 / self.p - 0.5) * span) ** (self.ell - 1.0) * dual
        return float(np.linalg.eigvalsh(self.matrix)[-1]) * span

    @property
    def quadratic_growth(self) -> float:
        """Modulus rho with f - min f >= rho/2 * dist^2, when available."""
        if self.kind == "linear":
            # <x,theta> + ||theta|| R >= (||theta||/2R) ||x - x_star||^2 on the ball
            return float(np.linalg.norm(self.theta)) / self.body.radius
        if self.kind == "quadratic":
            return float(np.linalg.eigvalsh(self.matrix)[0])
        if self.kind == "power_norm" and self.ell == 2.0 and self.p == 2.0:
            return 2.0 * self.beta
        raise GeometryError("no closed-form quadratic-growth modulus for this loss")


# Noise specifications ------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class NoiseSpec:
    """Observation-noise model.

    Kinds: vanishing (scale = dist to optimum), scaled (user scale function),
    multiplicative (scale = loss value, requires min f = 0), constant.
    Base distributions are unit-variance: gaussian, rademacher, or uniform.
    """

    kind: str = "vanishing"
    base: str = "gaussian"
    sigma0: float = 1.0
    scale_fn: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        if self.kind not in ("vanishing", "scaled", "multiplicative", "constant"):
            raise GeometryError(f"unknown noise kind {self.kind!r}")
        if self.base not in ("gaussian", "rademacher", "uniform"):
            raise GeometryError(f"unknown base distribution {self.base!r}")
        if self.kind == "scaled" and self.scale_fn is None:
            raise GeometryError("scaled noise needs a scale function")

    def base_draw(self, rng: np.random.Generator) -> float:
        if self.base == "gaussian":
            return float(rng.standard_normal())
        if self.base == "rademacher":
            return 1.0 if rng.random() < 0.5 else -1.0
        return float(rng.uniform(-math.sqrt(3.0), math.sqrt(3.0)))

    def scale(self, loss: LossSpec, x_real: np.ndarray) -> float:
        if self.kind == "vanishing":
            return self.sigma0 * float(np.linalg.norm(x_real - loss.x_star))
        if self.kind == "scaled":
            return float(self.scale_fn(x_real))
        if self.kind == "multiplicative":
            return float(loss.value(x_real))
        return self.sigma0


@dataclasses.dataclass
class QueryRecord:
    """Hidden per-query diagnostics; never handed to the solver."""

    index: int
    x_proposed: np.ndarray
    x_real: np.ndarray
    eps: float
    loss_real: float
    dist_to_opt: float
    y: float


class Environment:
    """Bandit oracle: query(x) -> noisy extended-loss value.

    Needs a noise seed of its own; the solver's sampling randomness is a
    separate stream so traces are reproducible under either change alone.
    """

    def __init__(
        self,
        loss: LossSpec,
        noise: NoiseSpec,
        seed: int,
        extension_mode: str = "plain",
        alpha: float = 0.0,
        margin: float = 0.0,
    ):
        if noise.kind == "multiplicative" and abs(loss.minimum) > 1e-12:
            raise GeometryError("multiplicative noise requires min f = 0")
        self.loss = loss
        self.noise = noise
        self.rng = np.random.default_rng(seed)
        self.query_count = 0
        self.last_record: Optional[QueryRecord] = None
        if loss.body.kind == "ball":
            self.ext: Optional[ExtendedLoss] = ExtendedLoss(
                base=loss.value,
                body=loss.body,
                lipschitz=loss.lipschitz,
                mode=extension_mode,
                alpha=alpha,
                margin=margin,
            )
        else:
            self.ext = None

    @property
    def dim(self) -> int:
        return self.loss.body.dim

    def query(self, x: np.ndarray) -> float:
        """Constrained-setting query: extension value plus scaled noise."""
        if self.ext is None:
            return self.query_unconstrained(x)
        x = np.asarray(x, dtype=float)
        x_real = self.ext.real_action(x)
        eps = self.noise.base_draw(self.rng) * self.noise.scale(self.loss, x_real)
        y = learner_feedback(self.ext, x, eps)
        self.query_count += 1
        self.last_record = QueryRecord(
            index=self.query_count,
            x_proposed=x,
            x_real=x_real,
            eps=eps,
            loss_real=self.loss.value(x_real),
            dist_to_opt=float(np.linalg.norm(x_real - self.loss.x_star)),
            y=y,
        )
        return y

    def query_unconstrained(self, x: np.ndarray) -> float:
        """Whole-space query: raw loss value plus scaled noise."""
        x = np.asarray(x, dtype=float)
        eps = self.noise.base_draw(self.rng) * self.noise.scale(self.loss, x)
        y = self.loss.value(x) + eps
        self.query_count += 1
        self.last_record = QueryRecord(
            index=self.query_count,
            x_proposed=x,
            x_real=x,
            eps=eps,
            loss_real=self.loss.value(x),
            dist_to_opt=float(np.linalg.norm(x - self.loss.x_star)),
            y=y,
        )
        return y


class PairwiseDifferenceEnvironment:
    """Reduction from scaled to vanishing noise via paired queries.

    Each outer query at x issues two inner queries at the same point and
    returns W = |Y1 - Y2|; the loss part cancels, so the effective loss is
    E|eps1_bar - eps2_bar| * scale(x) (= 2/sqrt(pi) * scale for Gaussian
    noise), which vanishes at the optimum.  Inner round t maps to outer
    round ceil(t/2).
    """

    GAUSSIAN_MEAN_ABS_DIFF = 2.0 / math.sqrt(math.pi)

    def __init__(self, inner: Environment):
        self.inner = inner
        self.loss = inner.loss
        self.query_count = 0
        self.last_record: Optional[QueryRecord] = None

    @property
    def dim(self) -> int:
        return self.inner.dim

    def query(self, x: np.ndarray) -> float:
        y1 = self.inner.query(x)
        rec1 = self.inner.last_record
        y2 = self.inner.query(x)
        w = abs(y1 - y2)
        self.query_count += 1
        self.last_record = QueryRecord(
            index=self.query_count,
            x_proposed=rec1.x_proposed,
            x_real=rec1.x_real,
            eps=w - self.GAUSSIAN_MEAN_ABS_DIFF * self.inner.noise.scale(self.loss, rec1.x_real),
            loss_real=rec1.loss_real,
            dist_to_opt=rec1.dist_to_opt,
            y=w,
        )
        return w


# Growth-modulus probe ------------------------------------------------------

def growth_modulus_probe(
    loss: LossSpec, n_points: int = 4096, seed: int = 0
) -> float:
    """Empirical quadratic-growth modulus: min over sampled body points of
    2 (f(x) - min f) / ||x - x_star||^2."""
    rng = np.random.default_rng(seed)
    body = loss.body
    if body.kind == "whole":
        center, rad = loss.x_star, 1.0
    else:
        center, rad = body.center, body.radius
    g = rng.standard_normal((n_points, body.dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rad * rng.random(n_points) ** (1.0 / body.dim)
    pts = center + g * r[:, None]
    best = math.inf
    for x in pts:
        d2 = float(np.sum((x - loss.x_star) ** 2))
        if d2 < 1e-12:
            continue
        best = min(best, 2.0 * (loss.value(x) - loss.minimum) / d2)
    return best
