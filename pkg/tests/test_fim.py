import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jeffreys_mala import (
    AnalyticFimProvider,
    BoxConstraint,
    CallableFimProvider,
    CoinModel,
    ContractViolationError,
    DomainExhaustedError,
    FimPotential,
    FisherMatrix,
    GradientMode,
    OnePointConfig,
    SingularFimError,
    empirical_fim,
    evaluate_potential,
    one_point_fim_derivative,
    potential,
    potential_gradient_analytic,
)
from jeffreys_mala.diagnostics import fd_gradient_check
from jeffreys_mala.rng import stream

WIDE = BoxConstraint([-100.0], [100.0])


class FixedDirections:
    """rng stub: standard_normal cycles through preset directions."""

    def __init__(self, directions):
        self.directions = [np.atleast_1d(np.asarray(d, dtype=np.float64)) for d in directions]
        self.calls = 0

    def standard_normal(self, n):
        mu = self.directions[self.calls % len(self.directions)]
        self.calls += 1
        return mu

    def integers(self, lo, hi):
        return 0


class TestEmpiricalFim:
    def test_scalar_pair(self):
        assert empirical_fim([[2.0], [-2.0]]).entries[0, 0] == pytest.approx(4.0)

    def test_unit_vectors(self):
        fim = empirical_fim([[1.0, 0.0], [0.0, 1.0]])
        assert np.allclose(fim.entries, 0.5 * np.eye(2))

    def test_coin_counts_formula(self):
        model = CoinModel()
        phi = 2.3
        batch = model.simulate([phi], 500, stream(0, 20))
        scores = np.stack([model.score([phi], y) for y in batch.observations])
        k = int(batch.observations.sum())
        assert empirical_fim(scores).entries[0, 0] == pytest.approx(
            model.fim_from_counts(phi, k, 500), rel=1e-12
        )

    def test_empty_rejected(self):
        with pytest.raises(ContractViolationError):
            empirical_fim([])

    @given(st.integers(1, 6), st.integers(1, 30), st.integers(0, 10_000))
    def test_symmetric_psd(self, d, n, seed):
        scores = np.random.default_rng(seed).normal(size=(n, d))
        fim = empirical_fim(scores)
        assert np.array_equal(fim.entries, fim.entries.T)
        assert np.linalg.eigvalsh(fim.entries).min() >= -1e-12


class TestPotential:
    def test_identity(self):
        assert potential(FisherMatrix(np.eye(3))) == 0.0

    def test_scalar(self):
        assert potential(FisherMatrix([[4.0]])) == pytest.approx(-math.log(2.0))

    def test_diagonal(self):
        assert potential(FisherMatrix(np.diag([4.0, 9.0]))) == pytest.approx(-0.5 * math.log(36.0))

    @given(st.floats(1e-6, 1e6), st.integers(1, 5))
    def test_scaled_identity_closed_form(self, c, d):
        assert potential(FisherMatrix(c * np.eye(d))) == pytest.approx(
            -0.5 * d * math.log(c), rel=1e-9, abs=1e-9
        )

    def test_singular_rejected(self):
        with pytest.raises(SingularFimError):
            potential(FisherMatrix(np.diag([1.0, -0.5])))
        with pytest.raises(SingularFimError):
            potential(FisherMatrix(np.diag([1.0, 0.0])))
        with pytest.raises(SingularFimError):
            potential(FisherMatrix([[math.nan]]))


class TestGradientTrace:
    def test_scalar_quadratic(self):
        grad = potential_gradient_analytic(FisherMatrix([[4.0]]), [[[4.0]]])
        assert grad[0] == pytest.approx(-0.5)

    def test_constant_information(self):
        grad = potential_gradient_analytic(FisherMatrix(np.eye(2)), np.zeros((2, 2, 2)))
        assert np.allclose(grad, 0.0)

    def test_separable_diagonal(self):
        j = FisherMatrix(np.diag([4.0, 9.0]))
        djs = np.zeros((2, 2, 2))
        djs[0, 0, 0] = 2 * 2.0
        djs[1, 1, 1] = 2 * 3.0
        assert np.allclose(potential_gradient_analytic(j, djs), [-0.5, -1 / 3])

    @given(st.floats(0.1, 100.0))
    def test_scale_invariance(self, a):
        j = FisherMatrix([[2.0, 0.3], [0.3, 1.5]])
        djs = np.array([[[0.4, 0.1], [0.1, 0.0]], [[0.0, 0.2], [0.2, 1.0]]])
        base = potential_gradient_analytic(j, djs)
        scaled = potential_gradient_analytic(FisherMatrix(a * j.entries), a * djs)
        assert np.allclose(base, scaled, rtol=1e-9)

    def test_singular_rejected(self):
        with pytest.raises(SingularFimError):
            potential_gradient_analytic(FisherMatrix(np.zeros((2, 2))), np.zeros((2, 2, 2)))


class TestOnePoint:
    linear = CallableFimProvider(lambda th: np.array([[3.0 * th[0]]]), WIDE)

    def test_unit_direction_exact(self):
        cfg = OnePointConfig(delta=0.01, direction_draws=1)
        est = one_point_fim_derivative(self.linear, [5.0], cfg, FixedDirections([[1.0]]))
        assert est[0, 0, 0] == pytest.approx(3.0, rel=1e-9)

    def test_double_direction(self):
        cfg = OnePointConfig(delta=0.01, direction_draws=1)
        est = one_point_fim_derivative(self.linear, [5.0], cfg, FixedDirections([[2.0]]))
        assert est[0, 0, 0] == pytest.approx(12.0, rel=1e-9)

    def test_mean_over_draws_recovers_slope(self):
        cfg = OnePointConfig(delta=0.01, direction_draws=10_000)
        rng = stream(0, 21)
        est = one_point_fim_derivative(self.linear, [5.0], cfg, rng)[0, 0, 0]
        # per draw the estimate is 3 mu^2; the mean has std 3*sqrt(2)/100
        assert abs(est - 3.0) < 2 * 3.0 * math.sqrt(2.0) / 100.0

    def test_bias_shrinks_with_delta(self):
        cubic = CallableFimProvider(lambda th: np.array([[th[0] ** 3]]), WIDE)
        # symmetric +-1 directions cancel the odd term: bias is exactly delta^2
        biases = []
        for delta in (1e-2, 1e-3):
            cfg = OnePointConfig(delta=delta, direction_draws=2)
            est = one_point_fim_derivative(cubic, [2.0], cfg, FixedDirections([[1.0], [-1.0]]))
            biases.append(abs(est[0, 0, 0] - 12.0))
        assert biases[1] < biases[0]
        assert biases[0] == pytest.approx(1e-4, rel=1e-3)

    def test_matrix_valued_mean_matches_finite_differences(self):
        # 2-parameter polynomial information matrix: the draw-averaged estimate
        # agrees with central differences componentwise within 3 standard errors
        box = BoxConstraint([-50.0, -50.0], [50.0, 50.0])

        def info(th):
            return np.array([
                [1.0 + th[0] ** 2, th[0] * th[1]],
                [th[0] * th[1], 2.0 + th[1] ** 2],
            ])

        provider = CallableFimProvider(info, box, dim=2)
        theta = np.array([1.5, -0.7])
        h = 1e-6
        fd = np.empty((2, 2, 2))
        for j in range(2):
            step = np.zeros(2)
            step[j] = h
            fd[j] = (info(theta + step) - info(theta - step)) / (2 * h)
        cfg = OnePointConfig(delta=1e-3, direction_draws=1)
        rng = stream(0, 23)
        draws = np.stack([
            one_point_fim_derivative(provider, theta, cfg, rng) for _ in range(4000)
        ])
        mean = draws.mean(axis=0)
        se = draws.std(axis=0) / math.sqrt(draws.shape[0])
        assert np.all(np.abs(mean - fd) <= 3.0 * se + 1e-9)

    def test_domain_exhausted(self):
        cfg = OnePointConfig(delta=0.01, direction_draws=1)
        huge = FixedDirections([[1e9]])
        with pytest.raises(DomainExhaustedError):
            one_point_fim_derivative(self.linear, [5.0], cfg, huge)

    def test_config_validation(self):
        with pytest.raises(ContractViolationError):
            OnePointConfig(delta=-1.0)
        with pytest.raises(ContractViolationError):
            OnePointConfig(delta=0.01, direction_draws=0)
        with pytest.raises(ContractViolationError):
            OnePointConfig(delta=5.0).check(WIDE)  # limit is 1e-2 * width = 2


class TestEvaluatePotential:
    def test_coin_analytic_matches_fd(self):
        model = CoinModel()
        box = BoxConstraint([2.0], [3.0])
        pot = FimPotential(AnalyticFimProvider(model, box), GradientMode.ANALYTIC_TRACE)
        errs = fd_gradient_check(pot, np.array([2.5]), 1e-6)
        assert errs.max() < 1e-6

    def test_constant_information_flat_potential(self):
        const = CallableFimProvider(lambda th: np.array([[2.0]]), WIDE)
        cfg = OnePointConfig(delta=0.01)
        rng = stream(0, 22)
        ev1 = evaluate_potential(const, [0.0], GradientMode.ONE_POINT, cfg, rng)
        ev2 = evaluate_potential(const, [3.0], GradientMode.ONE_POINT, cfg, rng)
        assert ev1.value == pytest.approx(ev2.value)
        assert np.allclose(ev1.gradient, 0.0, atol=1e-12)

    def test_gradient_clip(self):
        steep = CallableFimProvider(lambda th: np.array([[math.exp(40.0 * th[0])]]), WIDE)

        class Jac:
            pass

        provider = steep
        provider.fim_jacobian = lambda th: np.array(
            [[[40.0 * math.exp(40.0 * th[0])]]]
        )
        pot = FimPotential(provider, GradientMode.ANALYTIC_TRACE, gradient_clip=5.0)
        ev = pot.evaluate(np.array([1.0]), None)
        assert np.linalg.norm(ev.gradient) == pytest.approx(5.0)

    def test_mode_requires_config(self):
        with pytest.raises(ContractViolationError):
            evaluate_potential(self_provider(), [0.0], GradientMode.ONE_POINT)


def self_provider():
    return CallableFimProvider(lambda th: np.array([[1.0 + th[0] ** 2]]), WIDE)
