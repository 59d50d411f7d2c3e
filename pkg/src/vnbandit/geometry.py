"""Convex bodies, Minkowski gauges, ellipsoidal-norm projection and norm-power
Hessians.

Everything here is deterministic numpy; the only randomized routine is the
Monte-Carlo cone-fraction estimate, which takes an explicit seed.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np


class GeometryError(ValueError):
    """Bad geometric input (non-PD matrix, point outside domain, ...)."""


class ConvergenceError(RuntimeError):
    """Iterative routine did not reach tolerance.  Carries the residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


# Convex bodies -------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class ConvexBody:
    """Euclidean ball or the whole space.

    ``kind`` is "ball" or "whole".  For a ball the origin must be an interior
    point, so that the gauge is finite everywhere.
    """

    dim: int
    kind: str
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.kind not in ("ball", "whole"):
            raise GeometryError(f"unknown body kind {self.kind!r}")
        if self.dim < 1:
            raise GeometryError("dimension must be >= 1")
        c = np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)
        if c.shape != (self.dim,):
            raise GeometryError("center has wrong shape")
        if self.kind == "ball":
            if not self.radius > 0:
                raise GeometryError("ball radius must be positive")
            if np.linalg.norm(c) >= self.radius:
                raise GeometryError("origin must be interior to the body")

    @classmethod
    def unit_ball(cls, dim: int) -> "ConvexBody":
        return cls(dim, "ball", np.zeros(dim), 1.0)

    @classmethod
    def ball(cls, center: np.ndarray, radius: float) -> "ConvexBody":
        center = np.asarray(center, dtype=float)
        return cls(center.shape[0], "ball", center, float(radius))

    @classmethod
    def whole_space(cls, dim: int) -> "ConvexBody":
        return cls(dim, "whole", np.zeros(dim), math.inf)

    @property
    def inner_radius(self) -> float:
        """Largest r with the origin-centered r-ball inside the body."""
        if self.kind == "whole":
            return math.inf
        return self.radius - float(np.linalg.norm(self.center))

    @property
    def outer_radius(self) -> float:
        """Smallest R with the body inside the origin-centered R-ball."""
        if self.kind == "whole":
            return math.inf
        return self.radius + float(np.linalg.norm(self.center))

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        if self.kind == "whole":
            return True
        return float(np.linalg.norm(np.asarray(x, float) - self.center)) <= self.radius + tol

    def gauge(self, x: np.ndarray) -> float:
        """Minkowski gauge pi(x) = inf{t > 0 : x in t*K}.

        For a ball B(c, R) the dilation t*K is B(t*c, t*R), so the gauge is
        the positive root of ||x - t c||^2 = t^2 R^2.
        """
        if self.kind == "whole":
            return 0.0
        x = np.asarray(x, dtype=float)
        nx2 = float(x @ x)
        if nx2 == 0.0:
            return 0.0
        a = self.radius ** 2 - float(self.center @ self.center)
        xc = float(x @ self.center)
        return (-xc + math.sqrt(xc * xc + a * nx2)) / a

    def gauge_plus(self, x: np.ndarray) -> float:
        """max(1, gauge(x)); equals 1 exactly on the body."""
        return max(1.0, self.gauge(x))


# Projection in an ellipsoidal norm ----------------------------------------

def project_ellipsoidal(
    body: ConvexBody,
    precision: np.ndarray,
    y: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> np.ndarray:
    """argmin_{x in K} (x - y)^T P (x - y) for symmetric positive definite P.

    Interior points are returned unchanged.  For a ball the KKT system gives
    x(nu) = (P + nu I)^{-1} P (y - c) + c with ||x(nu) - c|| monotonically
    decreasing in nu >= 0; the multiplier is found by bisection on the radius
    residual.
    """
    y = np.asarray(y, dtype=float)
    if body.kind == "whole":
        return y.copy()
    P = 0.5 * (np.asarray(precision, float) + np.asarray(precision, float).T)
    evals, Q = np.linalg.eigh(P)
    if evals[0] <= 0:
        raise GeometryError("precision matrix must be positive definite")

    b = y - body.center
    R = body.radius
    if float(np.linalg.norm(b)) <= R:
        return y.copy()

    bt = Q.T @ b            # rotated coordinates, P = Q diag(evals) Q^T

    def radius_at(nu: float) -> float:
        z = evals * bt / (evals + nu)
        return float(np.linalg.norm(z))

    lo, hi = 0.0, max(evals[-1], 1.0)
    while radius_at(hi) > R:
        hi *= 2.0
        if hi > 1e300:
            raise ConvergenceError("projection bracket blew up", radius_at(hi) - R)
    nu = hi
    for _ in range(max_iter):
        nu = 0.5 * (lo + hi)
        r = radius_at(nu)
        if abs(r - R) <= tol:
            break
        if r > R:
            lo = nu
        else:
            hi = nu
    else:
        residual = abs(radius_at(nu) - R)
        if residual > tol:
            raise ConvergenceError("projection bisection did not converge", residual)
    z = Q @ (evals * bt / (evals + nu))
    return body.center + z


# Norm-power Hessians -------------------------------------------------------

def lp_power_hessian(x: np.ndarray, p: float, ell: float) -> np.ndarray:
    """Hessian of x -> ||x||_p^ell for p in (1, 2], ell >= 1, at x != 0.

    Closed form:  ell * ||x||_p^(ell-2) * ((p-1) Lam + (ell-p) v v^T)  where
    Lam = diag((|x_i|/||x||_p)^(p-2))  and  v_i = ||x||_p^(1-p) |x_i|^(p-1) sign(x_i).

    For p < 2 a zero coordinate makes Lam singular (negative power of zero),
    so such inputs are refused.
    """
    x = np.asarray(x, dtype=float)
    if not (1.0 < p <= 2.0):
        raise GeometryError("p must lie in (1, 2]")
    if ell < 1.0:
        raise GeometryError("ell must be >= 1")
    if np.all(x == 0.0):
        raise GeometryError("Hessian undefined at the origin")
    ax = np.abs(x)
    if p < 2.0 and np.any(ax == 0.0):
        raise GeometryError("p < 2 requires all coordinates nonzero")
    norm = float(np.sum(ax ** p) ** (1.0 / p))
    lam = (ax / norm) ** (p - 2.0)
    v = norm ** (1.0 - p) * ax ** (p - 1.0) * np.sign(x)
    H = ell * norm ** (ell - 2.0) * ((p - 1.0) * np.diag(lam) + (ell - p) * np.outer(v, v))
    return 0.5 * (H + H.T)


def lp_power_hessian_floor(d: int, p: float, ell: float, x: np.ndarray) -> float:
    """Scalar c with Hessian(||.||_p^ell) >= c*I at x, for ell > 1.

    c = ell (min(ell, p) - 1) d^{-(2-ell)(2-p)/(2p)} ||x||_2^{ell-2}.
    """
    nx = float(np.linalg.norm(np.asarray(x, float)))
    return ell * (min(ell, p) - 1.0) * d ** (-(2.0 - ell) * (2.0 - p) / (2.0 * p)) * nx ** (ell - 2.0)


# Cone fractions ------------------------------------------------------------

def cone_fraction_mc(
    body: ConvexBody,
    x: np.ndarray,
    radius: float,
    n_samples: int,
    seed: int,
) -> float:
    """Fraction of a radius-ball around x that lies inside the body, by MC.

    Requires x in the body, radius <= inner radius, and n_samples >= 10^4 so
    the binomial error is meaningful.
    """
    x = np.asarray(x, dtype=float)
    if not body.contains(x, tol=1e-12):
        raise GeometryError("probe point must lie in the body")
    if radius > body.inner_radius:
        raise GeometryError("probe radius exceeds the inner radius")
    if n_samples < 10_000:
        raise GeometryError("need at least 1e4 samples")
    rng = np.random.default_rng(seed)
    d = body.dim
    g = rng.standard_normal((n_samples, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n_samples) ** (1.0 / d)
    pts = x + g * r[:, None]
    if body.kind == "whole":
        return 1.0
    inside = np.linalg.norm(pts - body.center, axis=1) <= body.radius
    return float(np.mean(inside))


def cone_fraction_floor(d: int, r: float, R: float) -> float:
    """Lower bound (2 pi d)^{-1/2} (r / (sqrt(2) R))^{d-1} on the fraction of
    directions, from any point of a body with inner radius r and outer radius
    R, whose small steps move toward the inner ball."""
    return (1.0 / math.sqrt(2.0 * math.pi * d)) * (r / (math.sqrt(2.0) * R)) ** (d - 1)


# Small symmetric-matrix helpers -------------------------------------------

def sym(A: np.ndarray) -> np.ndarray:
    """Symmetrize: 0.5 (A + A^T)."""
    return 0.5 * (A + A.T)


def min_eigenvalue(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(sym(A))[0])


def is_pd(A: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(sym(A))
        return True
    except np.linalg.LinAlgError:
        return False
