"""Monte-Carlo and deterministic verification of the structural facts the
solver's analysis rests on.

Each check returns a row with the measured statistic, the bound it must
respect, the Monte-Carlo standard error used as slack (zero for exact
checks), a pass flag, and its runtime.  The battery is pure measurement: a
failing row is reported, never raised.
"""
from __future__ import annotations

import dataclasses
import math
import time
import zlib
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..geometry import (
    ConvexBody,
    cone_fraction_floor,
    cone_fraction_mc,
    lp_power_hessian,
    lp_power_hessian_floor,
    min_eigenvalue,
    sym,
)
from ..extension import ExtendedLoss, learner_feedback, learner_feedback_rescaled
from ..environment import LossSpec, growth_modulus_probe
from ..estimator import IterateDistribution, density_ratio, estimate_pair, surrogate_mc
from ..solver import (
    BetaEll,
    BetaOne,
    QG,
    growth_lower_bound,
    induction_upper_bound,
    practical_constants,
    theoretical_constants,
)
from .. import solver as solver_mod


@dataclasses.dataclass(frozen=True)
class CheckRow:
    name: str
    claim: str
    statistic: float
    bound: float
    stderr: float
    passed: bool
    seconds: float


@dataclasses.dataclass(frozen=True)
class VerifyReport:
    rows: List[CheckRow]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def summary(self) -> str:
        lines = []
        for r in self.rows:
            mark = "PASS" if r.passed else "FAIL"
            lines.append(
                f"[{mark}] {r.name}: stat={r.statistic:.6g} bound={r.bound:.6g} "
                f"stderr={r.stderr:.2g} ({r.seconds:.2f}s)  {r.claim}"
            )
        return "\n".join(lines)


# Individual checks ---------------------------------------------------------

def _check_feedback_identity(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = "the two spellings of the scaled-feedback map agree"
    worst = 0.0
    for _ in range(min(budget, 2000)):
        d = int(rng.integers(1, 5))
        body = ConvexBody.unit_ball(d)
        theta = rng.standard_normal(d)
        theta /= np.linalg.norm(theta)
        ext = ExtendedLoss(base=lambda u, th=theta: float(u @ th), body=body, lipschitz=1.0)
        x = rng.standard_normal(d) * 2.0
        eps = float(rng.standard_normal())
        a = learner_feedback(ext, x, eps)
        b = learner_feedback_rescaled(ext, x, eps)
        worst = max(worst, abs(a - b))
    return _row("feedback-identity", claim, worst, 1e-12, 0.0)


def _check_extension_basics(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = (
        "plain extension matches the base loss on the body, never increases "
        "under pullback, and respects its declared Lipschitz constant"
    )
    worst = 0.0
    for _ in range(min(budget, 2000)):
        d = int(rng.integers(1, 5))
        center = rng.standard_normal(d) * 0.2
        body = ConvexBody.ball(center, 1.0 + rng.random())
        theta = rng.standard_normal(d)
        G = float(np.linalg.norm(theta))
        ext = ExtendedLoss(base=lambda u, th=theta: float(u @ th), body=body, lipschitz=G)
        # match on the body
        inside = center + rng.standard_normal(d) * 0.1
        worst = max(worst, abs(ext.value(inside) - float(inside @ theta)))
        # pullback monotone outside
        outside = rng.standard_normal(d) * (body.outer_radius + 1.0 + rng.random())
        if not body.contains(outside):
            pulled = outside / body.gauge(outside)
            worst = max(worst, ext.value(pulled) - ext.value(outside))
        # empirical Lipschitz ratio
        a = rng.standard_normal(d) * 3.0
        b = rng.standard_normal(d) * 3.0
        gap = float(np.linalg.norm(a - b))
        if gap > 1e-9:
            ratio = abs(ext.value(a) - ext.value(b)) / gap
            worst = max(worst, ratio - ext.lip)
    return _row("extension-basics", claim, worst, 1e-9, 0.0)


def _check_extension_strongly_convex(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = (
        "strongly convex extension matches the base loss on the ball, is "
        "alpha-strongly convex on the enlarged ball, and respects its "
        "Lipschitz constant"
    )
    worst = 0.0
    for _ in range(min(budget, 2000)):
        d = int(rng.integers(1, 4))
        body = ConvexBody.unit_ball(d)
        alpha = 0.3 + rng.random()
        margin = 0.2 + 0.3 * rng.random()
        xs = rng.standard_normal(d)
        xs *= 0.5 / max(1.0, float(np.linalg.norm(xs)))
        base = lambda u, c=xs, a=alpha: 0.5 * a * float(np.sum((u - c) ** 2))
        G = alpha * (1.0 + float(np.linalg.norm(xs)))
        ext = ExtendedLoss(
            base=base, body=body, lipschitz=G,
            mode="strongly_convex", alpha=alpha, margin=margin,
        )
        inside = rng.standard_normal(d)
        inside *= rng.random() / max(1.0, float(np.linalg.norm(inside)))
        worst = max(worst, abs(ext.value(inside) - base(inside)))
        # midpoint strong convexity inside the enlarged ball
        pts = []
        for _ in range(2):
            v = rng.standard_normal(d)
            v *= (1.0 + margin) * rng.random() / max(1e-12, float(np.linalg.norm(v)))
            pts.append(v)
        a, b = pts
        lhs = ext.value(0.5 * (a + b))
        rhs = 0.5 * (ext.value(a) + ext.value(b)) - alpha / 8.0 * float(np.sum((a - b) ** 2))
        worst = max(worst, lhs - rhs)
        gap = float(np.linalg.norm(a - b))
        if gap > 1e-9:
            worst = max(worst, abs(ext.value(a) - ext.value(b)) / gap - ext.lip)
    return _row("extension-strongly-convex", claim, worst, 1e-9, 0.0)


def _check_surrogate_below_extension(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = "the optimistic smoothing surrogate never exceeds the extended loss"
    n = max(20_000, budget)
    worst = -math.inf
    worst_se = 0.0
    for trial in range(8):
        d = int(rng.integers(1, 4))
        body = ConvexBody.unit_ball(d)
        theta = rng.standard_normal(d)
        G = float(np.linalg.norm(theta))
        ext = ExtendedLoss(base=lambda u, th=theta: float(u @ th), body=body, lipschitz=G)
        mu = rng.standard_normal(d) * 0.3
        A = rng.standard_normal((d, d))
        P = A @ A.T + np.eye(d)
        dist = IterateDistribution(mu, P)
        lam = 0.05 + 0.4 * rng.random()
        x = rng.standard_normal(d) * 0.7
        est = surrogate_mc(ext.value, dist, lam, x, n, seed=int(rng.integers(2**31)))
        gap = est.value - ext.value(x)
        if gap > worst:
            worst, worst_se = gap, est.stderr
    return _row("surrogate-below-extension", claim, worst, 0.0, worst_se, slack=3.0)


def _check_estimator_unbiased(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = (
        "single-sample gradient/Hessian estimates average to the coupled "
        "finite-difference derivatives of the surrogate"
    )
    n = max(100_000, budget)
    h = 1e-4
    worst = 0.0
    for trial in range(3):
        d = 2
        body = ConvexBody.unit_ball(d)
        theta = rng.standard_normal(d)
        G = float(np.linalg.norm(theta))
        ext = ExtendedLoss(base=lambda u, th=theta: float(u @ th), body=body, lipschitz=G)
        mu = rng.standard_normal(d) * 0.3
        A = rng.standard_normal((d, d))
        P = A @ A.T + 2.0 * np.eye(d)
        dist = IterateDistribution(mu, P)
        lam = 0.1 + 0.2 * rng.random()
        xs = dist.sample_actions(np.random.default_rng(int(rng.integers(2**31))), n)
        one_m = 1.0 - lam
        # per-sample estimator gradient vs coupled central difference of the
        # surrogate integrand, so the comparison shares every draw
        for i_coord in range(d):
            e_i = np.zeros(d)
            e_i[i_coord] = 1.0
            vals = np.empty(n)
            for k in range(n):
                xk = xs[k]
                g_k = estimate_pair(dist, xk, float(ext.value(xk)), lam).grad[i_coord]
                up = ext.value(one_m * xk + lam * (mu + h * e_i))
                dn = ext.value(one_m * xk + lam * (mu - h * e_i))
                fd_k = (up - dn) / (2.0 * h * lam)
                vals[k] = g_k - fd_k
            mean = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(n))
            worst = max(worst, abs(mean) - 3.0 * se - G * h)
    return _row("estimator-unbiased", claim, worst, 0.0, 0.0)


def _check_ratio_ceiling(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = (
        "importance ratio at the mean never exceeds (1-lam)^-d, hence stays "
        "below 3 whenever lam <= 1 - 3^(-1/d)"
    )
    worst = -math.inf
    for _ in range(min(budget, 50_000)):
        d = int(rng.integers(1, 5))
        mu = rng.standard_normal(d)
        A = rng.standard_normal((d, d))
        P = A @ A.T + 0.5 * np.eye(d)
        dist = IterateDistribution(mu, P)
        lam = rng.random() * (1.0 - 3.0 ** (-1.0 / d))
        if lam <= 0.0:
            continue
        x = dist.sample_action(rng)
        r = density_ratio(dist, x, lam, mu)
        worst = max(worst, r)
    return _row("ratio-ceiling", claim, worst, 3.0, 0.0)


def _stein_rhs_sample(g: Callable[[np.ndarray], float], dist: IterateDistribution,
                      x: np.ndarray) -> np.ndarray:
    pv = dist.precision @ (x - dist.mu)
    return g(x) * (np.outer(pv, pv) - dist.precision)


def _check_stein_domination(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = (
        "for convex Lipschitz g, E[hess g(X)] is dominated by the Stein "
        "weighting E[g(X)(P(X-mu)(X-mu)^T P - P)]"
    )
    n = max(200_000, budget)
    worst = -math.inf
    for d in (1, 2, 3):
        for g_name in ("norm", "norm15"):
            mu = rng.standard_normal(d) * 0.5
            A = rng.standard_normal((d, d))
            P = A @ A.T + np.eye(d)
            dist = IterateDistribution(mu, P)
            xs = dist.sample_actions(np.random.default_rng(int(rng.integers(2**31))), n)
            diffs = np.empty((n, d, d))
            for k in range(n):
                x = xs[k]
                nx = float(np.linalg.norm(x))
                if nx < 1e-9:
                    diffs[k] = 0.0
                    continue
                if g_name == "norm":
                    gx = nx
                    if d == 1:
                        hess = np.zeros((1, 1))
                    else:
                        hess = (np.eye(d) - np.outer(x, x) / nx ** 2) / nx
                else:
                    gx = nx ** 1.5
                    hess = lp_power_hessian(x, 2.0, 1.5)
                diffs[k] = _stein_rhs_sample(lambda _x, v=gx: v, dist, x) - hess
            mean = sym(diffs.mean(axis=0))
            # conservative per-matrix slack: largest entrywise stderr times d
            se = float(np.max(diffs.std(axis=0, ddof=1))) / math.sqrt(n) * d
            stat = min_eigenvalue(mean) + 3.0 * se
            worst = max(worst, -stat)
    return _row("stein-domination", claim, worst, 0.0, 0.0)


def _check_distance_curvature_floor(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = (
        "mean Hessian of the distance to a point under a Gaussian keeps "
        "curvature at least 6^(-d/2) exp(-mahalanobis^2) / (2 sqrt(||Sigma||))"
    )
    n = max(400_000, budget)
    worst = -math.inf
    for d in (2, 3):
        for _ in range(3):
            mu = rng.standard_normal(d) * 0.4
            A = rng.standard_normal((d, d)) * 0.4
            P = A @ A.T + 2.0 * np.eye(d)
            dist = IterateDistribution(mu, P)
            x_star = rng.standard_normal(d) * 0.5
            cov = np.linalg.inv(P)
            floor = (
                6.0 ** (-d / 2.0)
                * math.exp(-dist.mahalanobis_sq(x_star))
                / (2.0 * math.sqrt(float(np.linalg.eigvalsh(cov)[-1])))
            )
            xs = dist.sample_actions(np.random.default_rng(int(rng.integers(2**31))), n)
            acc = np.zeros((n, d, d))
            for k in range(n):
                u = xs[k] - x_star
                nu = float(np.linalg.norm(u))
                if nu < 1e-8:
                    continue
                acc[k] = (np.eye(d) - np.outer(u, u) / nu ** 2) / nu
            mean = sym(acc.mean(axis=0))
            se = float(np.max(acc.std(axis=0, ddof=1))) / math.sqrt(n) * d
            stat = min_eigenvalue(mean) - floor + 3.0 * se
            worst = max(worst, -stat)
    return _row("distance-curvature-floor", claim, worst, 0.0, 0.0)


def _check_cone_fraction_floor(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = (
        "the ball fraction around any body point stays above "
        "(2 pi d)^(-1/2) (r/(sqrt(2) R))^(d-1)"
    )
    n = max(100_000, budget)
    worst = -math.inf
    for d in (1, 2, 3, 4):
        body = ConvexBody.unit_ball(d)
        # boundary points are the extremal case
        x = rng.standard_normal(d)
        x *= (1.0 - 1e-9) / float(np.linalg.norm(x))
        frac = cone_fraction_mc(body, x, body.inner_radius, n, seed=int(rng.integers(2**31)))
        floor = cone_fraction_floor(d, body.inner_radius, body.outer_radius)
        se = math.sqrt(max(frac * (1.0 - frac), 1e-12) / n)
        worst = max(worst, floor - frac - 3.0 * se)
    return _row("cone-fraction-floor", claim, worst, 0.0, 0.0)


def _check_norm_power_hessian(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = (
        "closed-form Hessians of ||x||_p^ell match central differences and "
        "respect the dimension-scaled curvature floor"
    )
    worst = 0.0
    h = 1e-5
    for p in (1.25, 1.5, 2.0):
        for ell in (1.0, 1.5, 2.0):
            for _ in range(10):
                d = int(rng.integers(2, 5))
                x = rng.standard_normal(d)
                x[np.abs(x) < 0.1] = 0.1  # keep away from the kink set
                H = lp_power_hessian(x, p, ell)
                fd = np.empty((d, d))
                def f(v: np.ndarray) -> float:
                    return float(np.sum(np.abs(v) ** p) ** (ell / p))
                for i in range(d):
                    for j in range(d):
                        ei = np.zeros(d); ei[i] = h
                        ej = np.zeros(d); ej[j] = h
                        fd[i, j] = (
                            f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
                        ) / (4.0 * h * h)
                worst = max(worst, float(np.max(np.abs(H - fd))) - 5e-4)
                if ell > 1.0:
                    floor = lp_power_hessian_floor(d, p, ell, x)
                    worst = max(worst, -(min_eigenvalue(H) - floor) - 1e-9)
    return _row("norm-power-hessian", claim, worst, 0.0, 0.0)


def _check_precision_ceiling(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = "the running precision stays below 1.5 t^2 h along a real run"
    from ..environment import Environment, NoiseSpec

    d = 2
    body = ConvexBody.unit_ball(d)
    theta = np.array([1.0, 0.0])
    loss = LossSpec(kind="linear", body=body, theta=theta)
    sched = practical_constants(
        "constrained", dim=d, horizon=500, sigma=0.1, lam=0.1, eta=0.5, gamma=1.0
    )
    env = Environment(loss, NoiseSpec(kind="vanishing"), seed=int(rng.integers(2**31)))
    lip_e = 2.0 * loss.lipschitz * body.outer_radius / body.inner_radius \
        + loss.lipschitz + 1.0 / body.inner_radius
    h = max(sched.sigma ** -2, 4.0 * sched.lam ** 2 * lip_e ** 2 * d / (1.0 - sched.lam) ** 2)
    records = solver_mod.run(env, sched, 500, seed=int(rng.integers(2**31)), body=body)
    worst = -math.inf
    for rec in records:
        worst = max(worst, rec.lambda_max - 1.5 * (rec.t + 1) ** 2 * h)
    return _row("precision-ceiling", claim, worst, 0.0, 0.0)


def _check_sequence_induction(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = "square-root self-bounded sequences stay below h*k with h = max(a^2, b)"
    ok = True
    n = min(max(budget, 10_000), 200_000)
    for a in (0.1, 1.0, 10.0):
        for b in (0.1, 1.0, 10.0):
            for c in (0.5, 1.0, 2.0):
                ok = ok and induction_upper_bound(a, b, c, n)
    return _row("sequence-induction", claim, 0.0 if ok else 1.0, 0.5, 0.0)


def _check_sequence_growth(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = "additively self-growing sequences exceed (a k)^(2/b) / 8"
    ok = True
    n = min(max(budget, 10_000), 200_000)
    for a in (0.1, 1.0, 10.0):
        for b in (1.0, 1.5, 2.0):
            ok = ok and growth_lower_bound(a, b, n)
    return _row("sequence-growth", claim, 0.0 if ok else 1.0, 0.5, 0.0)


def _check_power_growth_modulus(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = "norm-power losses on the unit ball grow quadratically with modulus 2^(ell-1) beta"
    worst = -math.inf
    for ell in (1.25, 1.5, 2.0):
        beta = 0.5 + rng.random()
        body = ConvexBody.unit_ball(2)
        xs = rng.standard_normal(2)
        xs *= 0.9 / max(1.0, float(np.linalg.norm(xs)))
        loss = LossSpec(kind="power_norm", body=body, beta=beta, ell=ell, p=2.0, x_star=xs)
        probe = growth_modulus_probe(loss, n_points=max(4096, budget // 10),
                                     seed=int(rng.integers(2**31)))
        worst = max(worst, 2.0 ** (ell - 1.0) * beta - probe)
    return _row("power-growth-modulus", claim, worst, 1e-9, 0.0)


def _check_constants_table(budget: int, rng: np.random.Generator) -> CheckRow:
    claim = (
        "the prescribed schedules satisfy every inequality in the constants "
        "table once the universal constants are large enough"
    )
    bad = 0
    cases = [
        (QG(rho=1.0), "constrained"),
        (BetaEll(beta=1.0, ell=1.5), "constrained"),
        (BetaOne(beta=1.0, kappa=1.0), "unconstrained"),
        (BetaOne(beta=1.0, kappa=0.5), "unconstrained"),
    ]
    for regime, alg in cases:
        G, r, R, d, n = 1.0, 1.0, 1.0, 2, 10_000
        sched = theoretical_constants(regime, dim=d, horizon=n, G=G, r=r, R=R,
                                      delta=0.01, C=32.0, C_prime=32.0)
        if alg == "constrained":
            lip_e = 2.0 * G * R / r + G + 1.0 / r
        else:
            lip_e = G
        rows = sched.validate(G=G, r=r, R=R, lip_e=lip_e)
        bad += sum(0 if row.ok else 1 for row in rows)
    return _row("constants-table", claim, float(bad), 0.5, 0.0)


_CHECKS: Dict[str, Callable[[int, np.random.Generator], CheckRow]] = {
    "feedback-identity": _check_feedback_identity,
    "extension-basics": _check_extension_basics,
    "extension-strongly-convex": _check_extension_strongly_convex,
    "surrogate-below-extension": _check_surrogate_below_extension,
    "estimator-unbiased": _check_estimator_unbiased,
    "ratio-ceiling": _check_ratio_ceiling,
    "stein-domination": _check_stein_domination,
    "distance-curvature-floor": _check_distance_curvature_floor,
    "cone-fraction-floor": _check_cone_fraction_floor,
    "norm-power-hessian": _check_norm_power_hessian,
    "precision-ceiling": _check_precision_ceiling,
    "sequence-induction": _check_sequence_induction,
    "sequence-growth": _check_sequence_growth,
    "power-growth-modulus": _check_power_growth_modulus,
    "constants-table": _check_constants_table,
}


def _row(name: str, claim: str, statistic: float, bound: float, stderr: float,
         slack: float = 0.0) -> CheckRow:
    passed = statistic <= bound + slack * stderr
    return CheckRow(name, claim, float(statistic), float(bound), float(stderr),
                    bool(passed), 0.0)


def available_checks() -> List[str]:
    return list(_CHECKS)


def verify_lemmas(
    checks: Optional[Sequence[str]] = None,
    budget: int = 100_000,
    seed: int = 0,
) -> VerifyReport:
    """Run the selected checks (all by default) with the given MC budget."""
    names = list(checks) if checks else list(_CHECKS)
    rows: List[CheckRow] = []
    for name in names:
        if name not in _CHECKS:
            raise ValueError(f"unknown check {name!r}; known: {sorted(_CHECKS)}")
        rng = np.random.default_rng(seed + zlib.crc32(name.encode()) % 100_000)
        start = time.perf_counter()
        row = _CHECKS[name](budget, rng)
        rows.append(dataclasses.replace(row, seconds=time.perf_counter() - start))
    return VerifyReport(rows=rows)
