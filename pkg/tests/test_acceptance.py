"""Acceptance gate: one test per release criterion, each printing a pass line
with the measured values at its stated tolerance.

All chains, estimates and experiments run at frozen seeds, so every number
below is reproducible.  The full-scale volatility experiment is marked slow
(run ``pytest -m slow tests/test_acceptance.py`` for it); its quick preset is
part of the default suite.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from jeffreys_mala import (
    AnalyticFimProvider,
    BoxConstraint,
    CallableFimProvider,
    CallablePotential,
    CoinModel,
    FimPotential,
    GradientMode,
    LgssModel,
    OnePointConfig,
    SamplerConfig,
    bootstrap_filter,
    ffbsm_score,
    one_point_fim_derivative,
    run_chain,
)
from jeffreys_mala.diagnostics import fd_gradient_check
from jeffreys_mala.experiments import ExperimentConfig, run_coin, run_sv, run_weibull
from jeffreys_mala.rng import stream
from jeffreys_mala.sampler import log_accept_ratio, log_proposal

SEED = 12345
COIN_BOX = BoxConstraint([2.0], [3.0])


def coin_potential() -> FimPotential:
    return FimPotential(AnalyticFimProvider(CoinModel(), COIN_BOX), GradientMode.ANALYTIC_TRACE)


@pytest.fixture(scope="module")
def coin_runs(tmp_path_factory):
    """The histogram-convergence experiment at its three sample sizes."""
    out = tmp_path_factory.mktemp("coin")
    t0 = time.perf_counter()
    metas = {}
    for n in (100, 1000, 10000):
        metas[n] = run_coin(
            ExperimentConfig(
                experiment="coin", iterations=n, realizations=10,
                output_dir=str(out / f"n{n}"), seed=SEED,
            )
        )
    return metas, time.perf_counter() - t0, out


@pytest.fixture(scope="module")
def sv_quick_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sv_quick")
    meta = run_sv(ExperimentConfig(experiment="sv", quick=True, output_dir=str(out), seed=SEED))
    return meta, out


@pytest.fixture(scope="module")
def weibull_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("weibull")
    t0 = time.perf_counter()
    metas = [
        run_weibull(ExperimentConfig(
            experiment="weibull", output_dir=str(out / f"rep{rep}"), seed=SEED + rep,
        ))
        for rep in range(3)
    ]
    return metas, time.perf_counter() - t0


def test_criterion_01_gradient_correctness():
    """Closed-form potential gradient vs central differences on the coin model."""
    t0 = time.perf_counter()
    potential = coin_potential()
    worst = max(
        fd_gradient_check(potential, np.array([phi]), 1e-5).max()
        for phi in np.linspace(2.05, 2.95, 20)
    )
    elapsed = time.perf_counter() - t0
    print(f"\n[MEASURED] criterion 1: max rel gradient error {worst:.3e}, {elapsed:.2f}s")
    assert worst < 1e-6
    assert elapsed < 1.0
    print("[PASS] criterion 1: gradient correctness (< 1e-6)")


def test_criterion_02_sampler_exactness_on_gaussian():
    """Standard-normal target: moments from 5e4 post-burn-in samples, 3 seeds."""
    target = CallablePotential(lambda th: 0.5 * float(th @ th), lambda th: th)
    box = BoxConstraint([-10.0], [10.0])
    t0 = time.perf_counter()
    stats = []
    for seed in (SEED, SEED + 1, SEED + 2):
        cfg = SamplerConfig(step_size=0.1, iterations=55_000, burn_in=5_000,
                            constraint=box, seed=seed)
        res = run_chain(cfg, np.zeros(1), target)
        stats.append((abs(float(res.samples.mean())), abs(float(res.samples.var()) - 1.0)))
    elapsed = time.perf_counter() - t0
    print(f"\n[MEASURED] criterion 2: |mean| {[f'{m:.4f}' for m, _ in stats]}, "
          f"|var-1| {[f'{v:.4f}' for _, v in stats]}, {elapsed:.1f}s")
    for mean_err, var_err in stats:
        assert mean_err < 0.05
        assert var_err < 0.05
    assert elapsed < 10.0
    print("[PASS] criterion 2: sampler exactness (bounds 0.05 / 0.05)")


def test_criterion_03_coin_histograms(coin_runs):
    """Histogram-vs-curve convergence across 100/1000/10000 samples."""
    metas, elapsed, out = coin_runs
    tvs = {n: [r["tv_distance"] for r in meta["realizations"]] for n, meta in metas.items()}
    medians = {n: float(np.median(v)) for n, v in tvs.items()}
    print(f"\n[MEASURED] criterion 3: TV medians {medians}, "
          f"max at N=10000 {max(tvs[10000]):.4f}, total {elapsed:.1f}s")
    assert max(tvs[10000]) < 0.08
    assert medians[100] > medians[1000] > medians[10000]
    for n in (100, 1000, 10000):
        for f in sorted((out / f"n{n}").glob("samples_*.csv")):
            samples = np.loadtxt(f, skiprows=1)
            assert samples.min() >= 2.0 and samples.max() <= 3.0  # 100% inside
    assert elapsed < 60.0
    print("[PASS] criterion 3: TV < 0.08 at N=10000, medians strictly decreasing, all in bounds")


def test_criterion_04_constraint_never_violated(coin_runs, sv_quick_run):
    """Out-of-bounds rejections occurred, yet every stored sample is in-box."""
    metas, _, out = coin_runs
    oob_seen = 0
    for n, meta in metas.items():
        for r, real in enumerate(meta["realizations"]):
            oob_seen += real["rejected_out_of_bounds"]
            samples = np.loadtxt(out / f"n{n}" / f"samples_{r:02d}.csv", skiprows=1)
            assert samples.min() >= 2.0 and samples.max() <= 3.0
    sv_meta, sv_out = sv_quick_run
    sv_oob = sv_meta["realizations"][0]["rejected_out_of_bounds"]
    sv_samples = np.loadtxt(sv_out / "samples_00.csv", skiprows=1)
    assert sv_samples.min() >= 0.3 and sv_samples.max() <= 0.9
    print(f"\n[MEASURED] criterion 4: {oob_seen} coin + {sv_oob} sv out-of-bounds rejections, "
          f"zero stored samples outside the boxes")
    assert oob_seen > 0 and sv_oob > 0
    print("[PASS] criterion 4: constrained acceptance (hard invariant held)")


def test_criterion_05_pf_score_validation():
    """Backward-smoothed particle score and log-likelihood vs the exact filter."""
    model = LgssModel()
    theta_eval = np.array([0.5, 0.4, 0.6])
    t0 = time.perf_counter()
    rel_score, rel_ll = [], []
    for s in range(5):
        batch = model.simulate(model.theta_default, 200, stream(SEED, 50, s, 0))
        ll_exact, score_exact = model.kalman(theta_eval, batch)
        ps = bootstrap_filter(model.nlss, theta_eval, batch, 2000, stream(SEED, 50, s, 1))
        score_pf = ffbsm_score(ps, model.nlss, theta_eval, batch)
        rel_score.append(np.linalg.norm(score_pf - score_exact) / np.linalg.norm(score_exact))
        rel_ll.append(abs(ps.loglik - ll_exact) / abs(ll_exact))
    elapsed = time.perf_counter() - t0
    print(f"\n[MEASURED] criterion 5: mean score rel err {np.mean(rel_score):.4f}, "
          f"mean loglik rel err {np.mean(rel_ll):.5f}, {elapsed:.1f}s")
    assert np.mean(rel_score) < 0.10
    assert np.mean(rel_ll) < 0.01
    assert elapsed < 120.0
    print("[PASS] criterion 5: PF score within 10%, log-likelihood within 1% of the exact filter")


def test_criterion_06_sv_experiment_quick(sv_quick_run):
    """Quick preset (T=200, N=2000, 500 particles): boundary ordering in < 3 min."""
    meta, _ = sv_quick_run
    ratio = meta["boundary_density_ratio"]
    wall = meta["wall_time_s"]
    print(f"\n[MEASURED] criterion 6 (quick): density ratio {ratio:.2f}, "
          f"grid ends ordered {meta['fim_grid_increasing_ends']}, wall {wall:.0f}s")
    assert meta["fim_grid_increasing_ends"]
    assert ratio >= 1.5
    assert wall < 180.0
    print("[PASS] criterion 6 (quick mode): boundary density ratio >= 1.5 in under 3 minutes")


@pytest.mark.slow
def test_criterion_06_sv_experiment_full_scale(tmp_path):
    """Paper-scale run: tau=0.05, N=10000 retained, T=1000, 1000 particles."""
    meta = run_sv(ExperimentConfig(experiment="sv", output_dir=str(tmp_path), seed=SEED))
    ratio = meta["boundary_density_ratio"]
    wall = meta["wall_time_s"]
    print(f"\n[MEASURED] criterion 6 (full): density ratio {ratio:.2f}, "
          f"grid ends ordered {meta['fim_grid_increasing_ends']}, wall {wall:.0f}s")
    assert meta["fim_grid_increasing_ends"]
    assert ratio >= 1.5
    assert wall <= 1800.0
    print("[PASS] criterion 6 (full scale): boundary density ratio >= 1.5 within 30 minutes")


def test_criterion_07_one_point_estimator():
    """Directional-difference derivative means over 1e4 draws, frozen stream."""
    box = BoxConstraint([-100.0], [100.0])
    cfg = OnePointConfig(delta=1e-3, direction_draws=10_000)
    t0 = time.perf_counter()
    linear = CallableFimProvider(lambda th: np.array([[3.0 * th[0]]]), box)
    quad = CallableFimProvider(lambda th: np.array([[th[0] ** 2]]), box)
    est_lin = one_point_fim_derivative(linear, [5.0], cfg, stream(SEED, 7, 0))[0, 0, 0]
    est_quad = one_point_fim_derivative(quad, [5.0], cfg, stream(SEED, 7, 1))[0, 0, 0]
    elapsed = time.perf_counter() - t0
    err_lin = abs(est_lin - 3.0) / 3.0
    err_quad = abs(est_quad - 10.0) / 10.0
    print(f"\n[MEASURED] criterion 7: linear slope {est_lin:.4f} (err {err_lin:.3%}), "
          f"quadratic slope {est_quad:.4f} (err {err_quad:.3%}), {elapsed:.1f}s")
    assert err_lin < 0.02
    assert err_quad < 0.02
    assert elapsed < 5.0
    print("[PASS] criterion 7: one-point derivative within 2% over 1e4 draws")


def test_criterion_08_estimator_comparison(weibull_runs):
    """Prior-comparison direction for the two-stage estimator, as stated.

    Note: the determinant of the Weibull information matrix is exactly
    (pi^2/6)/eta^2 — provably free of the shape parameter for the empirical
    estimator too — so the sampled prior differs from uniform only in its
    1/eta scale marginal.  The shape-restricted RMSE ordering demanded here is
    therefore seed-level noise, and this criterion is expected to fail; the
    robust counterpart (scale estimates at low scale improve, shape estimates
    comparable) is asserted in test_two_stage.py.
    """
    metas, elapsed = weibull_runs
    gamma_pairs = [
        (m["rmse_low_shape_jeffreys"][1], m["rmse_low_shape_uniform"][1]) for m in metas
    ]
    eta_pairs = [(m["rmse_jeffreys"][0], m["rmse_uniform"][0]) for m in metas]
    eta_diffs = [abs(j - u) / u for j, u in eta_pairs]
    print(f"\n[MEASURED] criterion 8: gamma RMSE (gamma<5) jeffreys-vs-uniform "
          f"{[(round(j, 3), round(u, 3)) for j, u in gamma_pairs]}, "
          f"eta RMSE rel diffs {[round(d, 3) for d in eta_diffs]}, {elapsed:.0f}s")
    assert elapsed < 600.0
    for j, u in gamma_pairs:
        assert j < u, (
            f"shape-restricted RMSE not strictly lower under the information prior "
            f"({j:.3f} vs {u:.3f}); the sampled prior is provably flat in the shape "
            f"parameter, so this ordering cannot hold robustly"
        )
    for d in eta_diffs:
        assert d < 0.25, f"scale RMSE differs by {d:.1%} (bound 25%)"
    print("[PASS] criterion 8: estimator comparison")


def test_criterion_09_determinism_across_workers(tmp_path):
    """Byte-identical sample files under 1-thread and 8-thread execution."""
    def run_all(workers: int, root: Path) -> dict[str, bytes]:
        payload = {}
        run_coin(ExperimentConfig(
            experiment="coin", iterations=200, realizations=3, workers=workers,
            output_dir=str(root / "coin"), seed=SEED,
        ))
        run_sv(ExperimentConfig(
            experiment="sv", iterations=60, t_len=40, particles=64, mc_runs=2,
            grid_points=3, realizations=2, workers=workers,
            output_dir=str(root / "sv"), seed=SEED,
        ))
        run_weibull(ExperimentConfig(
            experiment="weibull", n_train=60, n_obs=30, n_validation=20,
            workers=workers, output_dir=str(root / "weibull"), seed=SEED,
        ))
        for f in sorted(root.rglob("*.csv")):
            payload[str(f.relative_to(root))] = f.read_bytes()
        return payload

    serial = run_all(1, tmp_path / "w1")
    threaded = run_all(8, tmp_path / "w8")
    assert serial.keys() == threaded.keys()
    mismatched = [name for name in serial if serial[name] != threaded[name]]
    print(f"\n[MEASURED] criterion 9: {len(serial)} artifact files compared, "
          f"{len(mismatched)} mismatches")
    assert not mismatched
    print("[PASS] criterion 9: byte-identical artifacts under 1 and 8 workers")


def test_criterion_10_detailed_balance():
    """Metropolis balance identity with exact potentials on 100 random pairs."""
    potential = coin_potential()
    rng = stream(SEED, 10)
    tau = 0.1
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        a, b = rng.uniform(2.0, 3.0, size=2)
        ev_a = potential.evaluate(np.array([a]), rng)
        ev_b = potential.evaluate(np.array([b]), rng)
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
    elapsed = time.perf_counter() - t0
    print(f"\n[MEASURED] criterion 10: max rel balance error {worst:.3e}, {elapsed:.2f}s")
    assert worst < 1e-12
    assert elapsed < 1.0
    print("[PASS] criterion 10: detailed balance to 1e-12 on 100 pairs")
