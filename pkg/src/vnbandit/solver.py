"""Regularized and unregularized online Newton solvers for bandit convex
optimization with vanishing noise.

Two variants share one step routine:

  constrained    precision += eta * (H/2 + gamma I); mean projected onto the
                 body in the new precision norm.
  unconstrained  precision += eta/2 * H; no projection, no regularizer.

The solver talks to the environment only through query(x) -> float.  Any
ground-truth diagnostics (distance to the optimum, instantaneous regret) are
collected by an observer callback supplied by the harness, so no code path in
this module can see the environment's hidden state.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Callable, List, Optional

import numpy as np

from .geometry import ConvexBody, GeometryError, project_ellipsoidal, sym
from .estimator import IterateDistribution, estimate_pair


# Regimes -------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class QG:
    """Quadratic growth with modulus rho: f - min f >= rho/2 dist^2."""

    rho: float


@dataclasses.dataclass(frozen=True)
class BetaEll:
    """(beta, ell)-convexity with 1 < ell <= 2: f - beta ||. - x*||^ell convex."""

    beta: float
    ell: float


@dataclasses.dataclass(frozen=True)
class BetaOne:
    """(beta, 1)-convexity, unconstrained variant; kappa in (0, 2) trades the
    step size against the guaranteed precision growth exponent 2 - kappa."""

    beta: float
    kappa: float


Regime = object  # QG | BetaEll | BetaOne


# Schedules -----------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class ConstraintRow:
    name: str
    lhs: float
    rhs: float
    ok: bool


@dataclasses.dataclass(frozen=True)
class ConstantSchedule:
    """Frozen per-run constants.

    ``algorithm`` is "constrained" or "unconstrained".  L and H are carried
    even for hand-tuned (practical) schedules so the stopping conditions and
    the constraint replay stay evaluable.
    """

    algorithm: str
    dim: int
    horizon: int
    sigma: float
    lam: float
    eta: float
    gamma: float
    H: float
    L: float
    delta: float = 0.01
    regime: Optional[Regime] = None
    preset: str = "practical"

    def __post_init__(self):
        if self.algorithm not in ("constrained", "unconstrained"):
            raise GeometryError(f"unknown algorithm {self.algorithm!r}")
        if not (0.0 < self.lam < 1.0):
            raise GeometryError("lam must lie in (0, 1)")
        for name in ("sigma", "eta", "H", "L"):
            if getattr(self, name) <= 0:
                raise GeometryError(f"{name} must be positive")
        if self.gamma < 0:
            raise GeometryError("gamma must be nonnegative")

    # Constraint replay ----------------------------------------------------

    def validate(self, G: float, r: float, R: float, lip_e: float) -> List[ConstraintRow]:
        """Replay the full inequality table the analysis imposes on the
        constants.  Returns one row per inequality; nothing is raised."""
        d, n = self.dim, self.horizon
        sig, lam, eta, gam = self.sigma, self.lam, self.eta, self.gamma
        H, L = self.H, self.L
        rows: List[ConstraintRow] = []

        def add(name: str, lhs: float, rhs: float):
            rows.append(ConstraintRow(name, lhs, rhs, lhs <= rhs + 1e-12))

        h = max(sig ** -2, 4.0 * lam ** 2 * lip_e ** 2 * d / (1.0 - lam) ** 2)

        if self.algorithm == "constrained":
            add("eta small", eta, 4.0)
            add("initial precision dominates regularizer", eta * gam, sig ** -2)
            add("h below d^2 H^2", h, d * d * H * H)
            add("sigma below one", sig ** 2, 1.0)
            add("lam below d^-1/2 L^-3/2", lam, d ** -0.5 * L ** -1.5)
            add("lam below d^-1 L^-2", lam, 1.0 / (d * L * L))
            add("extension lipschitz below H", lip_e, H)
            add("lam below half", lam, 0.5)
            add("mean-step contraction", H * eta * lam * sig * math.sqrt(d), 1.0)
            add("hessian-noise drift", eta * H * d * d * L * L / math.sqrt(eta * gam), 2.0 / 3.0)
            cap = 1.0 / (10.0 * lam * lam * L * L)
            add("warmup potential", R * R / (2.0 * sig ** 2), cap)
            add("regularizer potential", eta * H * H * d * L / (2.0 * lam * lam * gam), cap)
            add("step potential", 2.0 * eta, cap)
            add("martingale potential", H * math.sqrt(eta * L) / (lam * lam * math.sqrt(gam)), cap)
            add("dimension potential", d * L / lam, cap)
            add("ratio concentration", 3.0, H / (lam * math.sqrt(L * eta * gam)))
            add("lam below 1/(2 sqrt(d) L)", lam, 1.0 / (2.0 * math.sqrt(d) * L))
            if isinstance(self.regime, BetaEll):
                beta, ell = self.regime.beta, self.regime.ell
                add("gamma matches 2^(ell-1) beta", abs(gam - 2.0 ** (ell - 1.0) * beta), 0.0)
                theta = (
                    ((ell - 1.0) / 30.0) ** (2.0 / ell)
                    * beta ** (2.0 / ell)
                    * d ** (-1.0 / ell)
                    * (r / (math.sqrt(2.0) * R)) ** (2.0 * (d - 1) / ell)
                    * eta ** (2.0 / ell)
                    * lam ** (6.0 / ell - 2.0)
                    * L ** (4.0 / ell - 2.0)
                )
                add("initial precision dominates growth coefficient", theta, sig ** -2)
                add("sigma small against inner radius", 5.0 * d, r / (math.sqrt(2.0) * sig))
                add("lam below 1/(10 d L)", lam, 1.0 / (10.0 * d * L))
                add("gamma below 8/R^2", gam, 8.0 / (R * R))
            elif isinstance(self.regime, QG):
                add("gamma matches rho", abs(gam - self.regime.rho), 0.0)
                add("gamma below 8/R^2", gam, 8.0 / (R * R))
        else:
            if not isinstance(self.regime, BetaOne):
                raise GeometryError("unconstrained validation needs a BetaOne regime")
            beta, kappa = self.regime.beta, self.regime.kappa
            theta = (
                beta ** (2.0 - kappa)
                * eta ** (2.0 - kappa)
                * 6.0 ** (-d * (2.0 - kappa) / 2.0)
                * math.exp(-(2.0 - kappa) / (lam * lam * L * L))
                / 32.0
            )
            J = max(math.sqrt(d * L), 1.0 / (lam * L))
            add("eta small", eta, 4.0)
            add("lam below 1 - 1/sqrt(2)", lam, 1.0 - 1.0 / math.sqrt(2.0))
            add("initial precision dominates growth coefficient", theta, sig ** -2)
            add("initial precision at least one", 1.0, sig ** -2)
            add("ratio concentration", 3.0, H * J * math.sqrt(L) / math.sqrt(theta))
            cap = 1.0 / (8.0 * lam * lam * L * L)
            add("warmup potential", R * R / (2.0 * sig ** 2), cap)
            add("variance potential", d * eta ** 2 * H * H * J * J * L ** 3 / (2.0 * theta), cap)
            add("step potential", 2.0 * eta, cap)
            add("martingale potential", eta * H * J * L ** 1.5 / (lam * math.sqrt(theta)), cap)
            add("hessian-noise drift", eta * lam * d * d * H * J * L ** 3 / math.sqrt(theta), 2.0 / 3.0)
            add("h below d^2 H^2", h, d * d * H * H)
            add("sigma below one", sig ** 2, 1.0)
            add("beta below 2/R", beta, 2.0 / R)
        return rows


def theoretical_constants(
    regime: Regime,
    dim: int,
    horizon: int,
    G: float,
    r: float,
    R: float,
    delta: float = 0.01,
    C: float = 1.0,
    C_prime: float = 1.0,
) -> ConstantSchedule:
    """The schedules the analysis prescribes, with explicit universal
    constants C (log factor) and C' (scale H)."""
    d, n = dim, horizon
    if isinstance(regime, (QG, BetaEll)):
        gamma = regime.rho if isinstance(regime, QG) else 2.0 ** (regime.ell - 1.0) * regime.beta
        H = C_prime * max(G / r, 1.0 / r)
        L = C * (1.0 + math.log(max(n, d, H, 1.0 / gamma, 1.0 / delta)))
        return ConstantSchedule(
            algorithm="constrained",
            dim=d,
            horizon=n,
            sigma=r / (5.0 * math.sqrt(2.0) * d),
            lam=1.0 / (H * d * L ** 3),
            eta=gamma / (100.0 * H * H * d ** 4 * L ** 5),
            gamma=gamma,
            H=H,
            L=L,
            delta=delta,
            regime=regime,
            preset="theoretical",
        )
    if isinstance(regime, BetaOne):
        beta, kappa = regime.beta, regime.kappa
        H = C_prime * max(G, 1.0)
        L = C * (1.0 + math.log(max(n, d, H, 1.0 / beta, 1.0 / delta)))
        eta = (
            beta ** (2.0 - kappa)
            / (1e7 * 6.0 ** (d * (2.0 - kappa) / 2.0) * H * H * d ** 5 * L ** 6)
        ) ** (1.0 / kappa)
        return ConstantSchedule(
            algorithm="unconstrained",
            dim=d,
            horizon=n,
            sigma=1.0,
            lam=1.0 / (2.0 * L),
            eta=eta,
            gamma=0.0,
            H=H,
            L=L,
            delta=delta,
            regime=regime,
            preset="theoretical",
        )
    raise GeometryError(f"unknown regime {regime!r}")


def practical_constants(
    algorithm: str,
    dim: int,
    horizon: int,
    sigma: float,
    lam: float,
    eta: float,
    gamma: float,
    regime: Optional[Regime] = None,
    delta: float = 0.01,
) -> ConstantSchedule:
    """Hand-tuned schedule; H and L keep their definitional roles (flags,
    stopping thresholds) but are not used to derive the step sizes."""
    H = max(1.0, 1.0 / max(sigma, 1e-12))
    L = 1.0 + math.log(max(horizon, dim, H, 1.0 / delta))
    return ConstantSchedule(
        algorithm=algorithm,
        dim=dim,
        horizon=horizon,
        sigma=sigma,
        lam=lam,
        eta=eta,
        gamma=gamma,
        H=H,
        L=L,
        delta=delta,
        regime=regime,
        preset="practical",
    )


# Solver state and stepping -------------------------------------------------

MAX_REPAIRS_PER_STEP = 40


@dataclasses.dataclass
class SolverState:
    t: int
    mu: np.ndarray
    precision: np.ndarray
    prev_y: float
    rng: np.random.Generator
    repairs: int = 0
    clamps: int = 0
    hbar_sum: Optional[np.ndarray] = None  # accumulated E[H] estimates (full diagnostics)


@dataclasses.dataclass
class StepRecord:
    t: int
    x: np.ndarray
    y: float
    z: float
    ratio: float
    clamped: bool
    repairs: int
    lambda_min: float
    lambda_max: float
    mu: np.ndarray


def init(schedule: ConstantSchedule, seed: int) -> SolverState:
    """mu_1 = 0, Sigma_1 = sigma^2 I, round counter starting at 1."""
    d = schedule.dim
    return SolverState(
        t=1,
        mu=np.zeros(d),
        precision=np.eye(d) / schedule.sigma ** 2,
        prev_y=0.0,
        rng=np.random.default_rng(seed),
    )


def _repair_pd(P: np.ndarray, state: SolverState) -> np.ndarray:
    """Make P positive definite by adding a doubling diagonal shift.

    Starts at 1e-12 * ||P||_F and gives up after MAX_REPAIRS_PER_STEP
    doublings; every shift is counted on the state.
    """
    try:
        np.linalg.cholesky(P)
        return P
    except np.linalg.LinAlgError:
        pass
    tau = 1e-12 * float(np.linalg.norm(P, "fro"))
    if tau == 0.0:
        tau = 1e-12
    for _ in range(MAX_REPAIRS_PER_STEP):
        state.repairs += 1
        P = P + tau * np.eye(P.shape[0])
        try:
            np.linalg.cholesky(P)
            return P
        except np.linalg.LinAlgError:
            tau *= 2.0
    raise GeometryError("precision matrix unrecoverable after repeated repair")


def step(
    state: SolverState,
    schedule: ConstantSchedule,
    query: Callable[[np.ndarray], float],
    body: Optional[ConvexBody],
) -> StepRecord:
    """One round: sample, query, difference, estimate, update, project."""
    dist = IterateDistribution(state.mu, state.precision)
    x = dist.sample_action(state.rng)
    y = float(query(x))
    z = y - state.prev_y
    est = estimate_pair(dist, x, z, schedule.lam)
    if est.clamped:
        state.clamps += 1

    if schedule.algorithm == "constrained":
        P_new = state.precision + schedule.eta * (
            0.5 * est.hess + schedule.gamma * np.eye(schedule.dim)
        )
    else:
        P_new = state.precision + 0.5 * schedule.eta * est.hess
    P_new = _repair_pd(sym(P_new), state)

    nu = state.mu - schedule.eta * np.linalg.solve(P_new, est.grad)
    if schedule.algorithm == "constrained" and body is not None and body.kind == "ball":
        if not body.contains(nu):
            nu = project_ellipsoidal(body, P_new, nu)

    evals = np.linalg.eigvalsh(P_new)
    rec = StepRecord(
        t=state.t,
        x=x,
        y=y,
        z=z,
        ratio=est.ratio,
        clamped=est.clamped,
        repairs=state.repairs,
        lambda_min=float(evals[0]),
        lambda_max=float(evals[-1]),
        mu=state.mu.copy(),
    )
    state.mu = nu
    state.precision = P_new
    state.prev_y = y
    state.t += 1
    return rec


def run(
    env,
    schedule: ConstantSchedule,
    n_rounds: int,
    seed: int,
    body: Optional[ConvexBody] = None,
    observer: Optional[Callable[[StepRecord], None]] = None,
) -> List[StepRecord]:
    """Run n_rounds steps against env.query; observer (if any) is called with
    each StepRecord after the environment has answered, which is where the
    harness harvests hidden diagnostics."""
    state = init(schedule, seed)
    records: List[StepRecord] = []
    for _ in range(n_rounds):
        rec = step(state, schedule, env.query, body)
        records.append(rec)
        if observer is not None:
            observer(rec)
    return records


# Stopping conditions -------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class StoppingReport:
    potential_ok: Optional[bool]
    potential: float
    pd_ok: bool
    sandwich_ok: Optional[bool]


def stopping_conditions(
    state: SolverState,
    schedule: ConstantSchedule,
    x_star: np.ndarray,
    hbar_sum: Optional[np.ndarray] = None,
) -> StoppingReport:
    """Evaluate the analysis's per-round health conditions.

    (a) the precision-norm potential 0.5 ||mu - x*||_P^2 stays below
        1 / (2 lam^2 L^2);
    (b) the precision matrix is positive definite;
    (c) with accumulated mean-Hessian estimates (full diagnostics only), the
        idealized precision sandwich 0.5 Pbar <= P <= 1.5 Pbar holds, where
        Pbar = sigma^{-2} I + eta/2 * sum E[H_k] + (t-1) eta gamma I.
    """
    P = state.precision
    diff = state.mu - np.asarray(x_star, float)
    potential = 0.5 * float(diff @ P @ diff)
    threshold = 1.0 / (2.0 * schedule.lam ** 2 * schedule.L ** 2)
    try:
        np.linalg.cholesky(sym(P))
        pd_ok = True
    except np.linalg.LinAlgError:
        pd_ok = False
    sandwich_ok = None
    if hbar_sum is not None:
        d = schedule.dim
        pbar = (
            np.eye(d) / schedule.sigma ** 2
            + 0.5 * schedule.eta * hbar_sum
            + (state.t - 1) * schedule.eta * schedule.gamma * np.eye(d)
        )
        lo = np.linalg.eigvalsh(sym(P - 0.5 * pbar))[0]
        hi = np.linalg.eigvalsh(sym(1.5 * pbar - P))[0]
        sandwich_ok = bool(lo >= -1e-9 and hi >= -1e-9)
    return StoppingReport(
        potential_ok=bool(potential <= threshold),
        potential=potential,
        pd_ok=pd_ok,
        sandwich_ok=sandwich_ok,
    )


# Sequence recursions used by the analysis ---------------------------------

def induction_upper_bound(a: float, b: float, c: float, n: int) -> bool:
    """If x_k <= a sqrt(b k + c sum_{j<k} x_j) with c <= 2, then x_k <= h k
    with h = max(a^2, b).  Checks the extremal (equality) sequence."""
    if c > 2.0:
        raise GeometryError("needs c <= 2")
    h = max(a * a, b)
    s = 0.0
    for k in range(1, n + 1):
        xk = a * math.sqrt(b * k + c * s)
        if xk > h * k * (1.0 + 1e-12):
            return False
        s += xk
    return True


def growth_lower_bound(a: float, b: float, n: int) -> bool:
    """If x_{k+1} - x_k >= a x_k^{(2-b)/2} with 1 <= b <= 2 and
    x_1^{b/2} >= a, then x_k >= (a k)^{2/b} / 8.  Checks the extremal
    sequence started at x_1 = a^{2/b}."""
    if not (1.0 <= b <= 2.0):
        raise GeometryError("needs b in [1, 2]")
    x = a ** (2.0 / b)
    for k in range(1, n + 1):
        if x < (a * k) ** (2.0 / b) / 8.0 * (1.0 - 1e-12):
            return False
        x = x + a * x ** ((2.0 - b) / 2.0)
    return True
