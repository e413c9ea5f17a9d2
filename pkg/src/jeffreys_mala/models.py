"""Bundled models: bent-coin Bernoulli, Hull-White stochastic volatility,
Weibull, and a linear-Gaussian state-space oracle with exact Kalman score.

The coin and Weibull models are static (i.i.d. observations, per-observation
scores); the volatility and linear-Gaussian models are dynamical and expose
``nlss`` state-space descriptions for the particle module.  The linear-Gaussian
model exists to validate the particle estimates against exact filter-based
quantities.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .core import BoxConstraint, FimCapability, Model, ObservationBatch, as_params
from .errors import ContractViolationError, DomainError, SupportError
from .fim import FimSource, FisherMatrix, empirical_fim
from .particle import GaussianTransition, NlssModel

__all__ = [
    "CoinModel",
    "WeibullModel",
    "SvModel",
    "LgssModel",
    "kalman_empirical_fim",
    "MODEL_REGISTRY",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class CoinModel(Model):
    """Bernoulli coin whose heads probability follows the bending angle:

        q(phi) = 1/2 + (phi/pi)^3 / 2,      phi in (0, pi].

    The per-sample information has the closed form J(phi) = s^2 / (1 - r^2)
    with r = (phi/pi)^3 and s = dr/dphi = 3 phi^2 / pi^3, which equals
    q p1^2 + (1-q) p0^2 for the score terms p1, p0 below.
    """

    dim = 1
    parameter_names = ("phi",)
    capability = FimCapability.ANALYTIC
    physical_domain = BoxConstraint([1e-9], [math.pi])

    def heads_prob(self, phi: float) -> float:
        phi = float(phi)
        if not 0.0 < phi <= math.pi:
            raise DomainError(f"bending angle must be in (0, pi], got {phi}")
        return 0.5 + 0.5 * (phi / math.pi) ** 3

    def score_terms(self, phi: float) -> tuple[float, float]:
        """(p1, p0): score magnitudes for heads and tails outcomes."""
        phi = float(phi)
        if not 0.0 < phi < math.pi:
            raise DomainError(f"score terms defined for phi in (0, pi), got {phi}")
        r = (phi / math.pi) ** 3
        s = 3.0 * phi**2 / math.pi**3
        return s / (1.0 + r), s / (1.0 - r)

    def simulate(self, theta, n: int, rng) -> ObservationBatch:
        phi = float(self.check_theta(theta)[0])
        if n < 1:
            raise ContractViolationError("need n >= 1 draws")
        q = self.heads_prob(phi)
        return ObservationBatch((rng.random(n) < q).astype(np.float64))

    def log_density(self, theta, y) -> float:
        phi = float(as_params(theta, 1)[0])
        q = self.heads_prob(phi)
        return float(np.log(q) if y else np.log1p(-q))

    def score(self, theta, y) -> np.ndarray:
        p1, p0 = self.score_terms(as_params(theta, 1)[0])
        return np.array([p1 if y else -p0])

    def fim(self, theta) -> np.ndarray:
        phi = float(as_params(theta, 1)[0])
        if not 0.0 < phi < math.pi:
            raise DomainError(f"information defined for phi in (0, pi), got {phi}")
        r = (phi / math.pi) ** 3
        s = 3.0 * phi**2 / math.pi**3
        return np.array([[s * s / (1.0 - r * r)]])

    def fim_jacobian(self, theta) -> np.ndarray:
        phi = float(as_params(theta, 1)[0])
        if not 0.0 < phi < math.pi:
            raise DomainError(f"information defined for phi in (0, pi), got {phi}")
        r = (phi / math.pi) ** 3
        s = 3.0 * phi**2 / math.pi**3
        ds = 6.0 * phi / math.pi**3
        one = 1.0 - r * r
        return np.array([[[2.0 * s * ds / one + 2.0 * s**3 * r / one**2]]])

    def fim_from_counts(self, phi: float, k_heads: int, n: int) -> float:
        """Empirical per-sample information (k/n) p1^2 + ((n-k)/n) p0^2."""
        if n < 1 or not 0 <= k_heads <= n:
            raise ContractViolationError(f"need 0 <= k <= n, n >= 1, got k={k_heads}, n={n}")
        phi = float(phi)
        if not 0.0 < phi <= math.pi:
            raise DomainError(f"bending angle must be in (0, pi], got {phi}")
        r = (phi / math.pi) ** 3
        s = 3.0 * phi**2 / math.pi**3
        p1 = s / (1.0 + r)
        value = (k_heads / n) * p1 * p1
        if k_heads < n:
            if phi >= math.pi:
                raise DomainError("tails score diverges at phi = pi")
            p0 = s / (1.0 - r)
            value += ((n - k_heads) / n) * p0 * p0
        return value


class WeibullModel(Model):
    """Weibull family with scale eta and shape gamma (both positive)."""

    dim = 2
    parameter_names = ("eta", "gamma")
    capability = FimCapability.EMPIRICAL_SCORE
    physical_domain = BoxConstraint([1e-8, 1e-8], [1e8, 1e8])

    def inverse_transform(self, theta, u) -> np.ndarray:
        """Quantile-style map A = eta * (-ln u)^(1/gamma) of uniform draws."""
        eta, gamma = as_params(theta, 2)
        u = np.asarray(u, dtype=np.float64)
        return eta * np.power(-np.log(u), 1.0 / gamma)

    def simulate(self, theta, n: int, rng) -> ObservationBatch:
        theta = self.check_theta(theta)
        if n < 1:
            raise ContractViolationError("need n >= 1 draws")
        u = np.maximum(rng.random(n), 1e-300)
        return ObservationBatch(self.inverse_transform(theta, u))

    def log_density(self, theta, a) -> float:
        eta, gamma = self.check_theta(theta)
        a = float(a)
        if a <= 0.0:
            raise SupportError(f"support is a > 0, got {a}")
        z = a / eta
        return float(np.log(gamma / eta) + (gamma - 1.0) * np.log(z) - z**gamma)

    def score(self, theta, a) -> np.ndarray:
        eta, gamma = self.check_theta(theta)
        a = float(a)
        if a <= 0.0:
            raise SupportError(f"support is a > 0, got {a}")
        zg = (a / eta) ** gamma
        log_z = math.log(a / eta)
        return np.array([
            (gamma / eta) * (zg - 1.0),
            1.0 / gamma + log_z * (1.0 - zg),
        ])

    def score_batch(self, theta, a) -> np.ndarray:
        """Per-observation scores for a whole batch, (n, 2)."""
        eta, gamma = self.check_theta(theta)
        a = np.asarray(a, dtype=np.float64)
        if np.any(a <= 0.0):
            raise SupportError("support is a > 0")
        log_z = np.log(a / eta)
        zg = np.exp(gamma * log_z)
        return np.stack([(gamma / eta) * (zg - 1.0), 1.0 / gamma + log_z * (1.0 - zg)], axis=1)

    def mean(self, theta) -> float:
        eta, gamma = as_params(theta, 2)
        return float(eta * math.gamma(1.0 + 1.0 / gamma))


class SvModel(Model):
    """Log-volatility state-space model with one free dynamics parameter phi:

        x_{t+1} | x_t ~ N(phi x_t + rho u_t, sigma_v^2)
        y_t     | x_t ~ N(0, beta^2 exp(x_t))

    with standard-normal white-noise inputs u_t and stationary initial state
    x_0 ~ N(0, sigma_v^2 / (1 - phi^2)).
    """

    dim = 1
    parameter_names = ("phi",)
    capability = FimCapability.PARTICLE_FILTER
    physical_domain = BoxConstraint([-0.99], [0.99])

    def __init__(self, rho: float = 0.2, sigma_v: float = 0.5, beta: float = 0.7):
        if sigma_v <= 0 or beta <= 0:
            raise ContractViolationError("sigma_v and beta must be positive")
        self.rho = float(rho)
        self.sigma_v = float(sigma_v)
        self.beta = float(beta)

    def stationary_sd(self, phi: float) -> float:
        if not abs(phi) < 1.0:
            raise DomainError(f"stationarity requires |phi| < 1, got {phi}")
        return self.sigma_v / math.sqrt(1.0 - phi * phi)

    def simulate(self, theta, n: int, rng) -> ObservationBatch:
        phi = float(self.check_theta(theta)[0])
        if n < 1:
            raise ContractViolationError("need n >= 1 time steps")
        x0 = self.stationary_sd(phi) * rng.standard_normal()
        u = rng.standard_normal(n)
        shocks = self.rho * u + self.sigma_v * rng.standard_normal(n)
        x = _kernels.ar1_path(x0, shocks, phi)
        y = self.beta * np.exp(0.5 * x) * rng.standard_normal(n)
        return ObservationBatch(y, inputs=u)

    @property
    def nlss(self) -> NlssModel:
        rho, sig_v, beta = self.rho, self.sigma_v, self.beta
        inv_q = 1.0 / sig_v**2
        log_b2 = math.log(beta * beta)
        inv_b2 = 1.0 / (beta * beta)

        def trans_logpdf(xn, x, u, th):
            resid = xn - th[0] * x - rho * u
            return -_HALF_LOG_2PI - math.log(sig_v) - 0.5 * resid * resid * inv_q

        def trans_score(xn, x, u, th):
            resid = xn - th[0] * x - rho * u
            return np.asarray([resid * x * inv_q])

        def obs_logpdf(y, x, th):
            return -_HALF_LOG_2PI - 0.5 * (log_b2 + x) - 0.5 * y * y * np.exp(-x) * inv_b2

        def init_sampler(th, n, rng):
            return self.stationary_sd(th[0]) * rng.standard_normal(n)

        def trans_sampler(x, u, th, rng):
            return th[0] * x + rho * u + sig_v * rng.standard_normal(x.shape[0])

        def score_coeffs(x, u, th):
            m = th[0] * x + rho * u
            c1 = x * inv_q
            return np.asarray([[-m * c1, c1, np.zeros_like(x)]])

        def kernel(y, u, th, n_p, rng):
            return _kernels.sv_filter_score(y, u, th[0], rho, sig_v, beta, n_p, rng)

        return NlssModel(
            dim=1,
            transition_logdensity=trans_logpdf,
            observation_logdensity=obs_logpdf,
            transition_score=trans_score,
            initial_sampler=init_sampler,
            transition_sampler=trans_sampler,
            observation_score=None,
            gaussian_transition=GaussianTransition(
                mean=lambda x, u, th: th[0] * x + rho * u,
                var=lambda th: sig_v**2,
                score_coeffs=score_coeffs,
            ),
            filter_kernel=kernel,
        )


class LgssModel(Model):
    """Linear-Gaussian state space with exact Kalman likelihood and score:

        x_{t+1} = a x_t + b u_t + w_t,  w_t ~ N(0, q)
        y_t     = x_t + e_t,            e_t ~ N(0, r)

    theta = (a, q, r); b is a fixed input coefficient.  The initial variance
    p0 is a constant (independent of theta) so the exact score and the
    particle estimates target the same quantity.
    """

    dim = 3
    parameter_names = ("a", "q", "r")
    capability = FimCapability.PARTICLE_FILTER
    physical_domain = BoxConstraint([-0.99, 1e-6, 1e-6], [0.99, 1e3, 1e3])

    def __init__(self, a: float = 0.7, q_noise: float = 0.3, r_noise: float = 0.5,
                 b_input: float = 0.5, p0: float | None = None):
        if not abs(a) < 1.0:
            raise DomainError(f"stationarity requires |a| < 1, got {a}")
        self.a = float(a)
        self.q_noise = float(q_noise)
        self.r_noise = float(r_noise)
        self.b_input = float(b_input)
        self.p0 = float(p0) if p0 is not None else q_noise / (1.0 - a * a)

    @property
    def theta_default(self) -> np.ndarray:
        return np.array([self.a, self.q_noise, self.r_noise])

    def simulate(self, theta, n: int, rng) -> ObservationBatch:
        a, q, r = self.check_theta(theta)
        if n < 1:
            raise ContractViolationError("need n >= 1 time steps")
        x0 = math.sqrt(self.p0) * rng.standard_normal()
        u = rng.standard_normal(n)
        shocks = self.b_input * u + math.sqrt(q) * rng.standard_normal(n)
        x = _kernels.ar1_path(x0, shocks, a)
        y = x + math.sqrt(r) * rng.standard_normal(n)
        return ObservationBatch(y, inputs=u)

    def kalman(self, theta, batch: ObservationBatch) -> tuple[float, np.ndarray]:
        """Exact log-likelihood and its (a, q, r)-gradient via sensitivity
        recursions alongside the Kalman filter."""
        a, q, r = self.check_theta(theta)
        y = np.asarray(batch.observations, dtype=np.float64)
        if y.size == 0:
            return 0.0, np.zeros(3)
        u = np.zeros(y.shape[0]) if batch.inputs is None else np.asarray(batch.inputs)
        b = self.b_input
        mp = b * u[0]
        dmp = np.zeros(3)
        pp = a * a * self.p0 + q
        dpp = np.array([2.0 * a * self.p0, 1.0, 0.0])
        ll = 0.0
        dll = np.zeros(3)
        e_r = np.array([0.0, 0.0, 1.0])

        for k in range(y.size):
            s = pp + r
            ds = dpp + e_r
            v = y[k] - mp
            dv = -dmp
            ll += -_HALF_LOG_2PI - 0.5 * math.log(s) - 0.5 * v * v / s
            dll += -0.5 * (ds / s + 2.0 * v * dv / s - v * v * ds / (s * s))
            gain = pp / s
            dgain = dpp / s - pp * ds / (s * s)
            m = mp + gain * v
            dm = dmp + dgain * v + gain * dv
            p = (1.0 - gain) * pp
            dp = -dgain * pp + (1.0 - gain) * dpp
            if k + 1 < y.size:
                mp = a * m + b * u[k + 1]
                dmp = np.array([m, 0.0, 0.0]) + a * dm
                pp = a * a * p + q
                dpp = np.array([2.0 * a * p, 0.0, 0.0]) + a * a * dp + np.array([0.0, 1.0, 0.0])
        return float(ll), dll

    def kalman_score(self, theta, batch: ObservationBatch) -> np.ndarray:
        return self.kalman(theta, batch)[1]

    @property
    def nlss(self) -> NlssModel:
        b, p0 = self.b_input, self.p0
        sd0 = math.sqrt(p0)

        def trans_logpdf(xn, x, u, th):
            resid = xn - th[0] * x - b * u
            return -_HALF_LOG_2PI - 0.5 * math.log(th[1]) - 0.5 * resid * resid / th[1]

        def trans_score(xn, x, u, th):
            a, q = th[0], th[1]
            resid = xn - a * x - b * u
            zero = np.zeros(np.broadcast_shapes(np.shape(xn), np.shape(x)))
            return np.asarray([
                resid * x / q + zero,
                -0.5 / q + 0.5 * resid * resid / (q * q) + zero,
                zero,
            ])

        def obs_logpdf(y, x, th):
            e = y - x
            return -_HALF_LOG_2PI - 0.5 * math.log(th[2]) - 0.5 * e * e / th[2]

        def obs_score(y, x, th):
            rr = th[2]
            e = y - x
            zero = np.zeros(np.shape(x))
            return np.asarray([zero, zero, -0.5 / rr + 0.5 * e * e / (rr * rr)])

        def init_sampler(th, n, rng):
            return sd0 * rng.standard_normal(n)

        def trans_sampler(x, u, th, rng):
            return th[0] * x + b * u + math.sqrt(th[1]) * rng.standard_normal(x.shape[0])

        def score_coeffs(x, u, th):
            a, q = th[0], th[1]
            m = a * x + b * u
            c1_a = x / q
            zero = np.zeros_like(x)
            return np.asarray([
                [-m * c1_a, c1_a, zero],
                [-0.5 / q + 0.5 * m * m / (q * q) + zero, -m / (q * q), np.full_like(x, 0.5 / (q * q))],
                [zero, zero, zero],
            ])

        def kernel(y, u, th, n_p, rng):
            return _kernels.lgss_filter_score(y, u, th[0], th[1], th[2], b, sd0, n_p, rng)

        return NlssModel(
            dim=3,
            transition_logdensity=trans_logpdf,
            observation_logdensity=obs_logpdf,
            transition_score=trans_score,
            initial_sampler=init_sampler,
            transition_sampler=trans_sampler,
            observation_score=obs_score,
            gaussian_transition=GaussianTransition(
                mean=lambda x, u, th: th[0] * x + b * u,
                var=lambda th: float(th[1]),
                score_coeffs=score_coeffs,
            ),
            filter_kernel=kernel,
        )


def kalman_empirical_fim(model: LgssModel, theta, t_len: int, mc_runs: int, rng) -> FisherMatrix:
    """Per-sample information from exact Kalman scores on simulated datasets
    (oracle counterpart of the particle-filter estimate)."""
    theta = as_params(theta, 3)
    scores = [
        model.kalman_score(theta, model.simulate(theta, t_len, child))
        for child in rng.spawn(mc_runs)
    ]
    fim = empirical_fim(np.asarray(scores) / math.sqrt(t_len), source=FimSource.ANALYTIC)
    return fim


MODEL_REGISTRY = {
    "coin": CoinModel,
    "weibull": WeibullModel,
    "sv": SvModel,
    "lgss": LgssModel,
}
