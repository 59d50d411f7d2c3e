"""Convex extension of a loss beyond its constraint body, and the bandit
feedback map built on top of it.

The plain extension of f : K -> R is

    e(x) = pi(x) * f(x / pi(x)) + G * R * (pi(x) - 1),      pi = max(1, gauge)

which agrees with f on K, is convex and Lipschitz on all of R^d, and is
minimized on K.  The strongly convex variant trades a little extra Lipschitz
constant for alpha-strong convexity on an enlarged ball.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from .geometry import ConvexBody, GeometryError


@dataclasses.dataclass(frozen=True)
class ExtendedLoss:
    """Extension of a G-Lipschitz convex base loss on a body.

    mode "plain":  e(x) = pi(x) f(x/pi(x)) + G R (pi(x) - 1).
    mode "strongly_convex":  alpha-strongly convex on the ball of radius
    R + margin; requires an alpha-strongly-convex base loss and a centered
    body (gauge(x) = ||x|| / R).
    """

    base: Callable[[np.ndarray], float]
    body: ConvexBody
    lipschitz: float
    mode: str = "plain"
    alpha: float = 0.0
    margin: float = 0.0

    def __post_init__(self):
        if self.mode not in ("plain", "strongly_convex"):
            raise GeometryError(f"unknown extension mode {self.mode!r}")
        if self.body.kind != "ball":
            raise GeometryError("extension needs a bounded body")
        if self.mode == "strongly_convex":
            if self.alpha <= 0 or self.margin <= 0:
                raise GeometryError("strongly convex mode needs alpha > 0, margin > 0")
            if np.any(self.body.center != 0.0):
                raise GeometryError("strongly convex mode assumes a centered ball")

    # Lipschitz constants -------------------------------------------------

    @property
    def lip(self) -> float:
        """Lipschitz constant of the extension on all of R^d (plain) or the
        enlarged ball (strongly convex)."""
        G, R, r = self.lipschitz, self.body.outer_radius, self.body.inner_radius
        if self.mode == "plain":
            return 2.0 * G * R / r + G + 1.0 / r
        a, eps = self.alpha, self.margin
        Ga = G + a * R
        return 4.0 * (2.0 * R * Ga / r + Ga + (1.0 + a * R * R / 2.0) / r + a * (R + eps))

    # Values --------------------------------------------------------------

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if self.mode == "plain":
            return self._plain_value(x)
        return self._sc_value(x)

    __call__ = value

    def _plain_value(self, x: np.ndarray) -> float:
        pi = self.body.gauge_plus(x)
        G, R = self.lipschitz, self.body.outer_radius
        return pi * self.base(x / pi) + G * R * (pi - 1.0)

    def _sc_value(self, x: np.ndarray) -> float:
        a, eps = self.alpha, self.margin
        G, R, r = self.lipschitz, self.body.radius, self.body.inner_radius
        nx = float(np.linalg.norm(x))
        pi = max(1.0, nx / R)
        pi_eps = max(1.0, nx / (R + eps))
        M = (R + eps) * self.lip / 4.0
        return (
            pi * self.base(x / pi)
            + (G + 1.5 * a * R) * R * (pi - pi_eps)
            + 0.5 * a * nx * nx * (1.0 / pi_eps - 1.0 / pi)
            + M * (pi_eps - 1.0)
        )

    def real_action(self, x: np.ndarray) -> np.ndarray:
        """The in-body point x / pi^+(x) actually played when x is proposed."""
        x = np.asarray(x, dtype=float)
        return x / self.body.gauge_plus(x)


def learner_feedback(ext: ExtendedLoss, x: np.ndarray, eps: float) -> float:
    """Observed value for proposed action x with base-loss noise eps.

    Y = e(x) + pi^+(x) * eps, which equals the 'play the scaled-back point,
    scale the noisy observation' form pi^+ [f(x/pi^+) + eps] + G R (pi^+ - 1)
    for the plain extension.
    """
    return ext.value(x) + ext.body.gauge_plus(x) * eps


def learner_feedback_rescaled(ext: ExtendedLoss, x: np.ndarray, eps: float) -> float:
    """The equivalent pi^+ [f(x/pi^+) + eps] + G R (pi^+ - 1) form (plain mode).

    Kept separate so the algebraic identity with learner_feedback can be
    regression-tested.
    """
    x = np.asarray(x, dtype=float)
    pi = ext.body.gauge_plus(x)
    G, R = ext.lipschitz, ext.body.outer_radius
    return pi * (ext.base(x / pi) + eps) + G * R * (pi - 1.0)
