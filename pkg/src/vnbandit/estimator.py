"""Gaussian iterate distribution, importance-weighted density ratio, and the
single-sample gradient/Hessian estimators of the optimistic smoothing
surrogate

    s(x) = E[(1 - 1/lam) e(X) + (1/lam) e((1-lam) X + lam x)],   X ~ N(mu, Sigma).

All density ratios are formed in log space; the precision matrix (not the
covariance) is the stored object.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from typing import Callable, Optional, Tuple

import numpy as np

from .geometry import GeometryError, sym

LOG_CLAMP = 700.0  # exp overflows just above this


class RatioOverflowWarning(RuntimeWarning):
    """Raised (as a warning) when a density ratio had to be clamped."""


@dataclasses.dataclass(frozen=True)
class IterateDistribution:
    """N(mu, Sigma) stored through its precision P = Sigma^{-1}.

    The Cholesky factor of P and log det P are cached at construction; a
    non-PD precision is rejected here rather than at use sites.
    """

    mu: np.ndarray
    precision: np.ndarray
    chol: np.ndarray = dataclasses.field(init=False, repr=False)
    logdet: float = dataclasses.field(init=False)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        P = sym(np.asarray(self.precision, dtype=float))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "precision", P)
        try:
            L = np.linalg.cholesky(P)
        except np.linalg.LinAlgError as exc:
            raise GeometryError("precision matrix must be positive definite") from exc
        object.__setattr__(self, "chol", L)
        object.__setattr__(self, "logdet", 2.0 * float(np.sum(np.log(np.diag(L)))))

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def sample_action(self, rng: np.random.Generator) -> np.ndarray:
        """Draw X = mu + L^{-T} u with u standard normal, so cov(X) = P^{-1}."""
        u = rng.standard_normal(self.dim)
        return self.mu + np.linalg.solve(self.chol.T, u)

    def sample_actions(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.standard_normal((n, self.dim))
        return self.mu + np.linalg.solve(self.chol.T, u.T).T

    def mahalanobis_sq(self, x: np.ndarray) -> float:
        """||x - mu||^2 in the precision norm."""
        # chol is lower: P = L L^T, so ||v||_P^2 = ||L^T v||^2
        w = self.chol.T @ (np.asarray(x, float) - self.mu)
        return float(w @ w)


def density_ratio(
    dist: IterateDistribution, x: np.ndarray, lam: float, z: np.ndarray
) -> float:
    """R(z) = p((x - lam z)/(1 - lam)) / ((1-lam)^d p(x)) for the N(mu, Sigma)
    density p, computed in log space.

    Log values above the exp overflow threshold are clamped and flagged with
    a RatioOverflowWarning.
    """
    if not (0.0 < lam < 1.0):
        raise GeometryError("lam must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    shifted = (x - lam * z) / (1.0 - lam)
    log_r = (
        -0.5 * dist.mahalanobis_sq(shifted)
        + 0.5 * dist.mahalanobis_sq(x)
        - dist.dim * math.log(1.0 - lam)
    )
    if log_r > LOG_CLAMP:
        warnings.warn("density ratio clamped at exp(700)", RatioOverflowWarning)
        log_r = LOG_CLAMP
    return math.exp(log_r)


@dataclasses.dataclass(frozen=True)
class EstimatePair:
    """One round's surrogate gradient/Hessian estimate at the iterate mean."""

    grad: np.ndarray
    hess: np.ndarray
    ratio: float
    clamped: bool


def estimate_pair(
    dist: IterateDistribution, x: np.ndarray, z_value: float, lam: float
) -> EstimatePair:
    """Unbiased estimates of grad s(mu) and hess s(mu) from one action X and
    its (differenced) observation z_value:

        g = R Z P (X - mu) / (1-lam)^2
        H = (lam R Z / (1-lam)^2) [ P (X-mu)(X-mu)^T P / (1-lam)^2 - P ]
    """
    x = np.asarray(x, dtype=float)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RatioOverflowWarning)
        r = density_ratio(dist, x, lam, dist.mu)
        clamped = any(issubclass(w.category, RatioOverflowWarning) for w in caught)
    one_m = 1.0 - lam
    pv = dist.precision @ (x - dist.mu)
    g = (r * z_value / one_m ** 2) * pv
    H = (lam * r * z_value / one_m ** 2) * (
        np.outer(pv, pv) / one_m ** 2 - dist.precision
    )
    return EstimatePair(grad=g, hess=sym(H), ratio=r, clamped=clamped)


def estimate_pair_shifted_form(
    dist: IterateDistribution, x: np.ndarray, z_value: float, lam: float
) -> EstimatePair:
    """Same estimates written through the shifted point (X - lam mu)/(1 - lam).

    Algebraically identical to estimate_pair; kept as an independent spelling
    for regression tests.
    """
    x = np.asarray(x, dtype=float)
    r = density_ratio(dist, x, lam, dist.mu)
    one_m = 1.0 - lam
    shifted = (x - lam * dist.mu) / one_m
    w = dist.precision @ (shifted - dist.mu)
    g = (r * z_value / one_m) * w
    H = (lam * r * z_value / one_m ** 2) * (np.outer(w, w) - dist.precision)
    return EstimatePair(grad=g, hess=sym(H), ratio=r, clamped=False)


# Monte-Carlo surrogate evaluation -----------------------------------------

@dataclasses.dataclass(frozen=True)
class MCValue:
    value: float
    stderr: float


def surrogate_mc(
    loss_value: Callable[[np.ndarray], float],
    dist: IterateDistribution,
    lam: float,
    x: np.ndarray,
    n_samples: int,
    seed: int,
) -> MCValue:
    """Monte-Carlo s(x) with per-sample values and a standard error."""
    if not (0.0 < lam < 1.0):
        raise GeometryError("lam must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    xs = dist.sample_actions(rng, n_samples)
    x = np.asarray(x, dtype=float)
    vals = np.empty(n_samples)
    for i in range(n_samples):
        xi = xs[i]
        vals[i] = (1.0 - 1.0 / lam) * loss_value(xi) + (1.0 / lam) * loss_value(
            (1.0 - lam) * xi + lam * x
        )
    return MCValue(float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(n_samples)))


def surrogate_hessian_mc(
    loss_value: Callable[[np.ndarray], float],
    dist: IterateDistribution,
    lam: float,
    n_samples: int,
    seed: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo estimate of hess s(mu) by averaging single-sample Hessian
    estimates with Z = e(X).  Returns (mean matrix, entrywise stderr)."""
    rng = np.random.default_rng(seed)
    xs = dist.sample_actions(rng, n_samples)
    d = dist.dim
    acc = np.zeros((n_samples, d, d))
    for i in range(n_samples):
        acc[i] = estimate_pair(dist, xs[i], loss_value(xs[i]), lam).hess
    mean = sym(acc.mean(axis=0))
    stderr = acc.std(axis=0, ddof=1) / math.sqrt(n_samples)
    return mean, stderr
