"""Self-check suite behind the ``validate`` CLI subcommand.

Runs the package's oracle cross-checks (closed-form gradients vs finite
differences, particle estimates vs the exact Kalman oracle, Metropolis
balance, resampling expectation preservation, sampler exactness on a known
target) and prints one pass/fail line per check with the measured values.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import BoxConstraint
from .diagnostics import effective_sample_size, fd_gradient_check
from .fim import (
    AnalyticFimProvider,
    CallableFimProvider,
    FimPotential,
    GradientMode,
    OnePointConfig,
    one_point_fim_derivative,
)
from .models import CoinModel, LgssModel
from .particle import bootstrap_filter, ffbsm_score, filter_score, systematic_resample
from .rng import stream
from .sampler import CallablePotential, SamplerConfig, log_accept_ratio, log_proposal, run_chain

__all__ = ["CheckResult", "run_checks", "ALL_CHECKS", "QUICK_CHECKS"]


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    elapsed_s: float


def _coin_gradient_check(seed: int) -> tuple[bool, str]:
    model = CoinModel()
    box = BoxConstraint([2.0], [3.0])
    potential = FimPotential(AnalyticFimProvider(model, box), GradientMode.ANALYTIC_TRACE)
    errs = [
        fd_gradient_check(potential, np.array([phi]), 1e-5).max()
        for phi in np.linspace(2.05, 2.95, 20)
    ]
    worst = max(errs)
    return worst < 1e-6, f"max rel error {worst:.3e} (bound 1e-6)"


def _detailed_balance_check(seed: int) -> tuple[bool, str]:
    model = CoinModel()
    box = BoxConstraint([2.0], [3.0])
    potential = FimPotential(AnalyticFimProvider(model, box), GradientMode.ANALYTIC_TRACE)
    rng = stream(seed, 101)
    tau = 0.1
    worst = 0.0
    for _ in range(100):
        a, b = rng.uniform(2.0, 3.0, size=2)
        ev_a = potential.evaluate(np.array([a]), rng)
        ev_b = potential.evaluate(np.array([b]), rng)
        # log pi(a) + log q(b|a) + log rho(b<-a) must equal the reverse
        lhs = (
            -ev_a.value
            + log_proposal([b], [a], ev_a.gradient, tau)
            + min(0.0, log_accept_ratio([b], [a], ev_b.value, ev_a.value,
                                        ev_b.gradient, ev_a.gradient, tau))
        )
        rhs = (
            -ev_b.value
            + log_proposal([a], [b], ev_b.gradient, tau)
            + min(0.0, log_accept_ratio([a], [b], ev_a.value, ev_b.value,
                                        ev_a.gradient, ev_b.gradient, tau))
        )
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    return worst < 1e-12, f"max rel balance error {worst:.3e} (bound 1e-12)"


def _one_point_check(seed: int) -> tuple[bool, str]:
    box = BoxConstraint([-100.0], [100.0])
    rng = stream(seed, 102)
    cfg = OnePointConfig(delta=1e-3, direction_draws=10_000)
    linear = CallableFimProvider(lambda th: np.array([[3.0 * th[0]]]), box)
    quad = CallableFimProvider(lambda th: np.array([[th[0] ** 2]]), box)
    est_lin = one_point_fim_derivative(linear, [5.0], cfg, rng)[0, 0, 0]
    est_quad = one_point_fim_derivative(quad, [5.0], cfg, rng)[0, 0, 0]
    err_lin = abs(est_lin - 3.0) / 3.0
    err_quad = abs(est_quad - 10.0) / 10.0
    # the mean of 1e4 draws has relative std sqrt(2)/100; bound at ~3.5 sigma
    ok = err_lin < 0.05 and err_quad < 0.05
    return ok, f"linear rel err {err_lin:.4f}, quadratic rel err {err_quad:.4f} (bound 0.05)"


def _kalman_vs_pf_check(seed: int, t_len: int = 50, n_particles: int = 500) -> tuple[bool, str]:
    model = LgssModel()
    theta_eval = np.array([0.5, 0.4, 0.6])
    rel_ll, rel_sc = [], []
    for s in range(3):
        batch = model.simulate(model.theta_default, t_len, stream(seed, 103, s, 0))
        ll_k, score_k = model.kalman(theta_eval, batch)
        ps = bootstrap_filter(model.nlss, theta_eval, batch, n_particles, stream(seed, 103, s, 1))
        score_pf = ffbsm_score(ps, model.nlss, theta_eval, batch)
        rel_ll.append(abs(ps.loglik - ll_k) / abs(ll_k))
        rel_sc.append(np.linalg.norm(score_pf - score_k) / np.linalg.norm(score_k))
    ok = float(np.mean(rel_ll)) < 0.02 and float(np.mean(rel_sc)) < 0.15
    return ok, (
        f"mean loglik rel err {np.mean(rel_ll):.4f} (bound 0.02), "
        f"mean score rel err {np.mean(rel_sc):.4f} (bound 0.15)"
    )


def _genealogy_vs_kalman_check(seed: int) -> tuple[bool, str]:
    # coarse tracking only: the genealogy route is the cheap noisy estimator
    model = LgssModel()
    theta_eval = np.array([0.5, 0.4, 0.6])
    rel = []
    for s in range(4):
        batch = model.simulate(model.theta_default, 100, stream(seed, 104, s, 0))
        score_k = model.kalman_score(theta_eval, batch)
        score_g, _ = filter_score(model.nlss, theta_eval, batch, 1000, stream(seed, 104, s, 1))
        rel.append(np.linalg.norm(score_g - score_k) / np.linalg.norm(score_k))
    ok = float(np.mean(rel)) < 0.4
    return ok, f"mean genealogy-score rel err {np.mean(rel):.4f} (bound 0.4)"


def _sampler_exactness_check(seed: int) -> tuple[bool, str]:
    target = CallablePotential(lambda th: 0.5 * float(th @ th), lambda th: th)
    cfg = SamplerConfig(
        step_size=0.1, iterations=25_000, burn_in=2_500,
        constraint=BoxConstraint([-10.0], [10.0]), seed=seed + 7,
    )
    res = run_chain(cfg, np.zeros(1), target)
    mean = float(res.samples.mean())
    var = float(res.samples.var())
    ok = abs(mean) < 0.1 and abs(var - 1.0) < 0.1
    return ok, f"|mean| {abs(mean):.4f} (bound 0.1), |var-1| {abs(var - 1):.4f} (bound 0.1)"


def _resampling_check(seed: int) -> tuple[bool, str]:
    rng = stream(seed, 105)
    particles = rng.normal(size=64)
    w = rng.random(64)
    w /= w.sum()
    target = float(w @ particles)
    means = [particles[systematic_resample(w, rng)].mean() for _ in range(1000)]
    dev = abs(np.mean(means) - target)
    bound = 3.0 * np.std(means) / math.sqrt(len(means))
    return dev < max(bound, 1e-12), f"|bias| {dev:.3e} vs 3 MC std errors {bound:.3e}"


def _ess_check(seed: int) -> tuple[bool, str]:
    rng = stream(seed, 106)
    ess = effective_sample_size(rng.standard_normal(10_000))
    ok = 8_000 < ess < 12_000
    return ok, f"iid ESS {ess:.0f} (bounds [8000, 12000])"


QUICK_CHECKS = [
    ("coin-gradient-vs-fd", _coin_gradient_check),
    ("metropolis-balance", _detailed_balance_check),
    ("one-point-derivative", _one_point_check),
    ("resampling-preserves-expectations", _resampling_check),
    ("ess-iid", _ess_check),
    ("pf-vs-kalman-small", _kalman_vs_pf_check),
    ("genealogy-vs-kalman-small", _genealogy_vs_kalman_check),
]

ALL_CHECKS = QUICK_CHECKS + [
    ("sampler-exactness-gaussian", _sampler_exactness_check),
]


def run_checks(seed: int = 0, quick: bool = False, printer=print) -> list[CheckResult]:
    """Run the suite, print one line per check, return all results."""
    checks = QUICK_CHECKS if quick else ALL_CHECKS
    results = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(seed)
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - t0
        results.append(CheckResult(name, ok, detail, elapsed))
        printer(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail} ({elapsed:.1f}s)")
    return results
