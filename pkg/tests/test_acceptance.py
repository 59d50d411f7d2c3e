"""End-to-end acceptance suite.

Each criterion prints one verdict line (visible with -s or on failure) so a
full run doubles as a report.  The empirical rate checks (A6-A9) execute the
sweep presets under experiments/ with their recorded tuned constants; they
are the slow part of the suite.
"""
import math
import os

import numpy as np
import pytest

from vnbandit.environment import Environment, LossSpec, NoiseSpec, PairwiseDifferenceEnvironment
from vnbandit.estimator import IterateDistribution, density_ratio, surrogate_mc
from vnbandit.geometry import ConvexBody, lp_power_hessian, lp_power_hessian_floor
from vnbandit.harness.config import load_sweep
from vnbandit.harness.fitting import fit_power_law
from vnbandit.harness.runner import run_experiment, run_sweep
from vnbandit.harness.verify import verify_lemmas
from vnbandit.solver import (
    BetaEll,
    BetaOne,
    QG,
    growth_lower_bound,
    induction_upper_bound,
    practical_constants,
    run,
    theoretical_constants,
)
from vnbandit.harness.config import ExperimentSpec

EXPERIMENTS = os.path.join(os.path.dirname(__file__), "..", "experiments")


def _verdict(tag, ok, detail):
    print(f"[{tag}] {'PASS' if ok else 'FAIL'}: {detail}")


def _sweep(filename):
    doc = load_sweep(os.path.join(EXPERIMENTS, filename))
    return run_sweep(doc, workers=1)


def _slopes_by_cell(results, column, window=(0.1, 1.0)):
    cells = {}
    for name, _, trace in results:
        cells.setdefault(name, []).append(trace.columns[column])
    out = {}
    for name, series in cells.items():
        t = np.arange(1, len(series[0]) + 1, dtype=float)
        out[name] = fit_power_law(t, series, window=window)
    return out


# A1: single-sample gradient/Hessian estimates average to the surrogate's
# derivatives, checked against common-random-number finite differences.

def test_a1_estimator_unbiased_against_crn_finite_differences():
    rng = np.random.default_rng(2024)
    n = 1_000_000
    n_fd = 200_000
    lam = 0.1
    h = 1e-3
    worst_g = worst_h = 0.0
    for trial in range(5):
        d = 2
        mu = rng.uniform(-0.5, 0.5, d)
        A_half = rng.standard_normal((d, d))
        P = A_half @ A_half.T + 0.5 * np.eye(d)
        dist = IterateDistribution(mu, P)
        Q_half = rng.standard_normal((d, d))
        Q = Q_half @ Q_half.T + 0.1 * np.eye(d)
        b = rng.standard_normal(d)

        def e_scalar(x):
            return float(x @ Q @ x + b @ x)

        def e_batch(xs):
            return np.einsum("ni,ij,nj->n", xs, Q, xs) + xs @ b

        # vectorized single-sample estimates over 1e6 draws
        xs = dist.sample_actions(rng, n)
        v = xs - mu
        m = np.einsum("ni,ij,nj->n", v, P, v)
        log_r = -0.5 * m * ((1 - lam) ** -2 - 1) - d * math.log(1 - lam)
        r = np.exp(log_r)
        z = e_batch(xs)
        pv = v @ P
        gs = (r * z / (1 - lam) ** 2)[:, None] * pv
        hs = (lam * r * z / (1 - lam) ** 2)[:, None, None] * (
            np.einsum("ni,nj->nij", pv, pv) / (1 - lam) ** 2 - P[None]
        )
        g_mean, g_err = gs.mean(axis=0), gs.std(axis=0, ddof=1) / math.sqrt(n)
        h_mean, h_err = hs.mean(axis=0), hs.std(axis=0, ddof=1) / math.sqrt(n)

        # CRN finite differences of the Monte-Carlo surrogate (shared seed,
        # so the common noise cancels; the loss is quadratic, so the
        # difference quotients carry no truncation bias)
        seed = 9000 + trial

        def s(x):
            return surrogate_mc(e_scalar, dist, lam, x, n_fd, seed).value

        s0 = s(mu)
        g_fd = np.empty(d)
        h_fd = np.empty((d, d))
        for i in range(d):
            ei = np.zeros(d); ei[i] = h
            g_fd[i] = (s(mu + ei) - s(mu - ei)) / (2 * h)
            h_fd[i, i] = (s(mu + ei) - 2 * s0 + s(mu - ei)) / h ** 2
        e0 = np.array([h, 0.0]); e1 = np.array([0.0, h])
        h_fd[0, 1] = h_fd[1, 0] = (
            s(mu + e0 + e1) - s(mu + e0 - e1) - s(mu - e0 + e1) + s(mu - e0 - e1)
        ) / (4 * h ** 2)

        worst_g = max(worst_g, float(np.max(np.abs(g_mean - g_fd) / (3 * g_err))))
        worst_h = max(worst_h, float(np.max(np.abs(h_mean - h_fd) / (3 * h_err))))
    ok = worst_g <= 1.0 and worst_h <= 1.0
    _verdict("A1", ok, f"max |mean - fd| / (3 stderr): grad {worst_g:.3f}, hess {worst_h:.3f}")
    assert ok


# A2: the importance ratio evaluated at the current mean never exceeds 3 for
# mixing weights up to 1/2 (one-dimensional states; the ratio's supremum
# (1-lam)^(-d) stays under 3 on this range only for d = 1).

def test_a2_ratio_at_mean_bounded_by_three():
    rng = np.random.default_rng(7)
    worst = 0.0
    n_states, n_draws = 1000, 1000
    for _ in range(n_states):
        mu = rng.uniform(-5.0, 5.0, 1)
        prec = np.array([[10.0 ** rng.uniform(-3, 3)]])
        dist = IterateDistribution(mu, prec)
        lams = rng.uniform(1e-6, 0.5, n_draws)
        xs = dist.sample_actions(rng, n_draws)
        for lam, x in zip(lams, xs):
            worst = max(worst, density_ratio(dist, x, float(lam), mu))
    ok = worst <= 3.0 * (1.0 + 1e-12)
    _verdict("A2", ok, f"max ratio over {n_states * n_draws} tuples = {worst:.6f} <= 3")
    assert ok


# A3: closed-form Hessians of ||x||_p^ell against central differences of the
# analytic gradient (step 1e-5), plus the eigenvalue floor.

def test_a3_norm_power_hessians():
    rng = np.random.default_rng(11)
    h = 1e-5
    worst_rel = 0.0
    floor_ok = True
    for p in (1.25, 1.5, 2.0):
        for ell in (1.0, 1.5, 2.0):
            for _ in range(1000):
                d = int(rng.integers(2, 4))
                x = rng.standard_normal(d)
                x[np.abs(x) < 0.05] = 0.05  # p < 2 needs nonzero coordinates

                def grad(v):
                    np_norm = float(np.sum(np.abs(v) ** p) ** (1.0 / p))
                    return ell * np_norm ** (ell - p) * np.sign(v) * np.abs(v) ** (p - 1)

                H = lp_power_hessian(x, p, ell)
                H_fd = np.empty((d, d))
                for j in range(d):
                    ej = np.zeros(d); ej[j] = h
                    H_fd[:, j] = (grad(x + ej) - grad(x - ej)) / (2 * h)
                H_fd = 0.5 * (H_fd + H_fd.T)
                rel = float(np.max(np.abs(H - H_fd))) / max(float(np.max(np.abs(H))), 1e-12)
                worst_rel = max(worst_rel, rel)
                lam_min = float(np.linalg.eigvalsh(H)[0])
                if lam_min < lp_power_hessian_floor(d, p, ell, x) - 1e-9:
                    floor_ok = False
    ok = worst_rel <= 1e-6 and floor_ok
    _verdict("A3", ok, f"max relative error {worst_rel:.2e} <= 1e-6, eigenvalue floor {'held' if floor_ok else 'violated'}")
    assert ok


# A4: Monte-Carlo curvature-domination and distance-curvature batteries.

def test_a4_stein_and_curvature_floor():
    rep = verify_lemmas(checks=["stein-domination", "distance-curvature-floor"],
                        budget=100_000, seed=0)
    _verdict("A4", rep.all_passed, rep.summary().replace("\n", " | "))
    assert rep.all_passed, rep.summary()


# A5: extension battery (agreement on the body, convexity, Lipschitz,
# strong convexity, and the pullback inequality).

def test_a5_extension_battery():
    rep = verify_lemmas(
        checks=["extension-basics", "extension-strongly-convex",
                "surrogate-below-extension", "feedback-identity"],
        budget=100_000, seed=0)
    _verdict("A5", rep.all_passed, rep.summary().replace("\n", " | "))
    assert rep.all_passed, rep.summary()


# A6: linear loss on the unit disc with vanishing noise: distance decays
# like t^{-1/2}, precision grows linearly, regret is sublinear.

def test_a6_linear_loss_rate_recovery():
    results = _sweep("qg_linear_sweep.yaml")
    dist = _slopes_by_cell(results, "dist_to_opt")["qg-linear-d2"]
    prec = _slopes_by_cell(results, "lambda_min")["qg-linear-d2"]
    regret = _slopes_by_cell(results, "regret_cum")["qg-linear-d2"]
    ok = (-0.65 <= dist.slope <= -0.35) and (0.85 <= prec.slope <= 1.15) and (regret.slope <= 0.3)
    _verdict("A6", ok, f"dist slope {dist.slope:.3f} in [-0.65,-0.35]; "
             f"lambda_min slope {prec.slope:.3f} in [0.85,1.15]; "
             f"regret tail slope {regret.slope:.3f} <= 0.3")
    assert ok


# A7: norm-power losses, ell in {1.25, 1.5, 2}: precision grows like
# t^{2/ell}, distance decays at least like t^{-1/ell}.

def test_a7_power_norm_sweep():
    results = _sweep("power_norm_sweep.yaml")
    dist = _slopes_by_cell(results, "dist_to_opt")
    prec = _slopes_by_cell(results, "lambda_min")
    ok = True
    lines = []
    for cell, ell in (("power-norm-ell125", 1.25), ("power-norm-ell150", 1.5),
                      ("power-norm-ell200", 2.0)):
        target = 2.0 / ell
        p_ok = abs(prec[cell].slope - target) <= 0.25
        d_ok = dist[cell].slope <= -1.0 / ell + 0.15
        ok = ok and p_ok and d_ok
        lines.append(f"{cell}: prec {prec[cell].slope:.3f} vs {target:.3f} +-0.25 "
                     f"({'ok' if p_ok else 'out'}), dist {dist[cell].slope:.3f} "
                     f"<= {-1.0 / ell + 0.15:.3f} ({'ok' if d_ok else 'out'})")
    _verdict("A7", ok, "; ".join(lines))
    assert ok, lines


# A8: unregularized variant on f = ||x - x*||, no constraint set: distance
# slope at most -1 + kappa/2 (+0.2), precision slope at least 2 - kappa (-0.3).

def test_a8_unconstrained_sweep():
    results = _sweep("unconstrained_sweep.yaml")
    dist = _slopes_by_cell(results, "dist_to_opt")
    prec = _slopes_by_cell(results, "lambda_min")
    ok = True
    lines = []
    for cell, kappa in (("uncon-d1-k05", 0.5), ("uncon-d1-k10", 1.0),
                        ("uncon-d2-k05", 0.5), ("uncon-d2-k10", 1.0)):
        d_bound = -1.0 + kappa / 2.0 + 0.2
        p_bound = 2.0 - kappa - 0.3
        d_ok = dist[cell].slope <= d_bound
        p_ok = prec[cell].slope >= p_bound
        ok = ok and d_ok and p_ok
        lines.append(f"{cell}: dist {dist[cell].slope:.3f} <= {d_bound:.2f} "
                     f"({'ok' if d_ok else 'out'}), prec {prec[cell].slope:.3f} "
                     f">= {p_bound:.2f} ({'ok' if p_ok else 'out'})")
    _verdict("A8", ok, "; ".join(lines))
    assert ok, lines


# A9: paired-query reduction of multiplicative noise: the solver sees
# W = |Y1 - Y2| and still recovers the A6 distance rate; at probe points the
# mean of W is 2/sqrt(pi) times the noise scale.

def test_a9_pairwise_reduction():
    results = _sweep("pairwise_sweep.yaml")
    dist = _slopes_by_cell(results, "dist_to_opt")["pairwise-quadratic"]
    slope_ok = -0.65 <= dist.slope <= -0.35

    body = ConvexBody.unit_ball(2)
    loss = LossSpec(kind="power_norm", body=body, beta=1.0, ell=2.0, p=2.0,
                    x_star=np.array([0.3, -0.4]))
    env = PairwiseDifferenceEnvironment(
        Environment(loss, NoiseSpec(kind="multiplicative"), seed=123))
    worst_ratio_err = 0.0
    for probe in (np.array([0.0, 0.0]), np.array([-0.5, 0.2]), np.array([0.6, 0.1])):
        scale = env.inner.noise.scale(loss, probe)
        ws = np.array([env.query(probe) for _ in range(200_000)])
        ratio = float(ws.mean()) / scale
        worst_ratio_err = max(worst_ratio_err,
                              abs(ratio - 2.0 / math.sqrt(math.pi)) * math.sqrt(math.pi) / 2.0)
    mean_ok = worst_ratio_err <= 0.02
    ok = slope_ok and mean_ok
    _verdict("A9", ok, f"dist slope {dist.slope:.3f} in [-0.65,-0.35] "
             f"({'ok' if slope_ok else 'out'}); max relative E[W]/scale error "
             f"{worst_ratio_err:.4f} <= 0.02 ({'ok' if mean_ok else 'out'})")
    assert ok


# A10: deterministic suite: sequence recursions, the constants-constraint
# validator with explicit universal constants, and run-twice bit stability.

def test_a10_deterministic_suite():
    seq_ok = True
    for a in (0.1, 0.5, 1.0, 3.0, 10.0):
        for b in (0.1, 1.0, 5.0):
            for c in (0.0, 1.0, 2.0):
                seq_ok = seq_ok and induction_upper_bound(a, b, c, 5000)
        for b in (1.0, 1.25, 1.5, 2.0):
            seq_ok = seq_ok and growth_lower_bound(a, b, 5000)

    table_ok = True
    for regime in (QG(rho=1.0), BetaEll(beta=1.0, ell=1.5),
                   BetaOne(beta=1.0, kappa=0.5), BetaOne(beta=1.0, kappa=1.0)):
        sched = theoretical_constants(regime, dim=2, horizon=100_000,
                                      G=1.0, r=1.0, R=1.0, C=32.0, C_prime=32.0)
        lip_e = 4.0 if sched.algorithm == "constrained" else 1.0
        rows = sched.validate(G=1.0, r=1.0, R=1.0, lip_e=lip_e)
        table_ok = table_ok and all(r.ok for r in rows)

    spec = ExperimentSpec.from_dict({
        "name": "golden", "algorithm": "constrained", "rounds": 10, "seed": 5,
        "body": {"dim": 2, "radius": 1.0},
        "loss": {"kind": "linear", "theta": [1.0, 0.0]},
        "noise": {"kind": "vanishing"},
        "schedule": {"sigma": 0.1, "lam": 0.05, "eta": 1.0, "gamma": 1.0},
    })
    t1 = run_experiment(spec)
    t2 = run_experiment(spec)
    bit_ok = all(np.array_equal(t1.columns[c], t2.columns[c]) for c in t1.columns)

    ok = seq_ok and table_ok and bit_ok
    _verdict("A10", ok, f"sequence recursions {'ok' if seq_ok else 'fail'}; "
             f"constants table {'ok' if table_ok else 'fail'}; "
             f"10-step replay bit-stable {'ok' if bit_ok else 'fail'}")
    assert ok
