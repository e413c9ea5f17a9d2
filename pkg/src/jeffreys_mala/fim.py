"""Fisher information, the log-determinant potential and its gradients.

The sampling target is pi(theta) ∝ sqrt(det J(theta)), handled everywhere
through the potential

    V(theta) = -1/2 * log det J(theta),        grad_j V = -1/2 tr(J^{-1} dJ/dtheta_j)

with the unnormalized density exp(-V); the normalizing constant never appears
(it cancels in every Metropolis ratio).  When no closed-form dJ/dtheta exists
the directional-difference estimator

    dJ/dtheta_j  ~=  (mu_j / delta) * (J(theta + delta*mu) - J(theta)),   mu ~ N(0, I)

replaces it, reusing one base evaluation per call and sharing the estimation
substream between the base and perturbed points (common random numbers).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .core import BoxConstraint, as_params
from .errors import ContractViolationError, DomainExhaustedError, SingularFimError
from .rng import stream

__all__ = [
    "FimSource",
    "FisherMatrix",
    "GradientMode",
    "PotentialEvaluation",
    "OnePointConfig",
    "empirical_fim",
    "potential",
    "potential_gradient_analytic",
    "one_point_fim_derivative",
    "evaluate_potential",
    "FimProvider",
    "AnalyticFimProvider",
    "EmpiricalFimProvider",
    "CallableFimProvider",
    "FimPotential",
]

#: eigenvalues below EPS_PSD * trace/d make the log-determinant unusable
EPS_PSD = 1e-10


class FimSource(enum.Enum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"
    PARTICLE_FILTER = "particle_filter"


class GradientMode(enum.Enum):
    ANALYTIC_TRACE = "analytic_trace"
    ONE_POINT = "one_point"


@dataclass
class FisherMatrix:
    """Symmetric d x d information matrix; symmetrized on construction."""

    entries: np.ndarray
    source: FimSource = FimSource.ANALYTIC

    def __post_init__(self):
        j = np.atleast_2d(np.asarray(self.entries, dtype=np.float64))
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ContractViolationError(f"FIM must be square, got shape {j.shape}")
        self.entries = 0.5 * (j + j.T)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def empirical_fim(scores, source: FimSource = FimSource.EMPIRICAL) -> FisherMatrix:
    """Average of score outer products, (1/n) sum_i s_i s_i^T."""
    s = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    if s.size == 0:
        raise ContractViolationError("empirical_fim needs a nonempty score list")
    if s.ndim != 2:
        raise ContractViolationError("scores must be a list of equal-length vectors")
    return FisherMatrix(s.T @ s / s.shape[0], source=source)


def _checked_eigvals(fim: FisherMatrix) -> np.ndarray:
    j = fim.entries
    if not np.all(np.isfinite(j)):
        raise SingularFimError(f"non-finite FIM entries: {j}")
    eigs = np.linalg.eigvalsh(j)
    floor = EPS_PSD * np.trace(j) / fim.dim
    if not np.all(eigs > max(floor, 0.0)):
        raise SingularFimError(
            f"FIM not positive definite (eigenvalues {eigs}, floor {floor:.3e})"
        )
    return eigs


def potential(fim: FisherMatrix) -> float:
    """-1/2 log det J, computed in the log domain from the spectrum.

    Raises SingularFimError when the determinant is not strictly positive;
    samplers reject such proposals.
    """
    return -0.5 * float(np.sum(np.log(_checked_eigvals(fim))))


def potential_gradient_analytic(fim: FisherMatrix, fim_jacobian) -> np.ndarray:
    """Gradient component j = -1/2 tr(J^{-1} dJ/dtheta_j)."""
    djs = np.asarray(fim_jacobian, dtype=np.float64)
    if djs.ndim == 2:
        djs = djs[None, :, :]
    d = fim.dim
    if djs.shape[1:] != (d, d):
        raise ContractViolationError(
            f"FIM jacobian must be (d, {d}, {d}), got {djs.shape}"
        )
    _checked_eigvals(fim)
    grad = np.empty(djs.shape[0])
    for j, dj in enumerate(djs):
        grad[j] = -0.5 * np.trace(np.linalg.solve(fim.entries, dj))
    return grad


@dataclass(frozen=True)
class OnePointConfig:
    """Directional-difference derivative settings.

    delta: perturbation step; must stay small relative to the evaluation
    domain (delta <= 1e-2 * min box width, enforced by ``check``).
    direction_draws: number of direction draws averaged; the base FIM is
    evaluated once and reused, so each extra draw costs one FIM evaluation.
    """

    delta: float = 5e-3
    direction_draws: int = 1

    def __post_init__(self):
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ContractViolationError(f"delta must be positive, got {self.delta}")
        if self.direction_draws < 1:
            raise ContractViolationError("direction_draws must be >= 1")

    def check(self, domain: BoxConstraint) -> "OnePointConfig":
        limit = 1e-2 * float(np.min(domain.widths))
        if self.delta > limit:
            raise ContractViolationError(
                f"delta={self.delta} too large for domain widths {domain.widths}"
                f" (limit {limit:.3e})"
            )
        return self


@dataclass
class PotentialEvaluation:
    """Potential value, gradient and the information matrix they came from."""

    value: float
    gradient: np.ndarray
    fim: FisherMatrix | None = None
    gradient_kind: GradientMode | None = None


@runtime_checkable
class FimProvider(Protocol):
    """theta -> FisherMatrix, with the box on which evaluations are defined."""

    dim: int
    domain: BoxConstraint

    def __call__(self, theta: np.ndarray, rng: np.random.Generator) -> FisherMatrix: ...


@dataclass
class AnalyticFimProvider:
    """Closed-form FIM and its parameter jacobian from a model.

    The model must implement ``fim(theta) -> (d, d) array`` and
    ``fim_jacobian(theta) -> (d, d, d) array``.
    """

    model: object
    domain: BoxConstraint

    @property
    def dim(self) -> int:
        return self.model.dim

    def __call__(self, theta, rng=None) -> FisherMatrix:
        return FisherMatrix(self.model.fim(as_params(theta, self.dim)), FimSource.ANALYTIC)

    def fim_jacobian(self, theta) -> np.ndarray:
        return np.asarray(self.model.fim_jacobian(as_params(theta, self.dim)))


@dataclass
class EmpiricalFimProvider:
    """Monte Carlo FIM: simulate n draws at theta, average score outer products."""

    model: object
    domain: BoxConstraint
    n_draws: int = 200

    @property
    def dim(self) -> int:
        return self.model.dim

    def __call__(self, theta, rng) -> FisherMatrix:
        theta = as_params(theta, self.dim)
        batch = self.model.simulate(theta, self.n_draws, rng)
        if hasattr(self.model, "score_batch"):
            scores = self.model.score_batch(theta, batch.observations)
        else:
            scores = np.stack([self.model.score(theta, y) for y in batch.observations])
        return empirical_fim(scores)


@dataclass
class CallableFimProvider:
    """Wrap a plain function theta -> matrix (test targets, synthetic FIMs)."""

    fn: Callable[[np.ndarray], np.ndarray]
    domain: BoxConstraint
    dim: int = 1
    source: FimSource = FimSource.ANALYTIC

    def __call__(self, theta, rng=None) -> FisherMatrix:
        return FisherMatrix(np.atleast_2d(self.fn(as_params(theta, self.dim))), self.source)


def one_point_fim_derivative(
    fim_provider,
    theta,
    cfg: OnePointConfig,
    rng: np.random.Generator,
    *,
    base: FisherMatrix | None = None,
    eval_rng: Callable[[], np.random.Generator] | None = None,
    max_redraws: int = 32,
) -> np.ndarray:
    """Estimate the d matrices dJ/dtheta_j by directional differences.

    Per direction draw mu ~ N(0, I_d):

        dJ/dtheta_j ~= (mu_j / delta) * (J(theta + delta*mu) - J(theta))

    averaged over ``cfg.direction_draws`` draws.  mu is redrawn (up to
    ``max_redraws`` times per draw) whenever theta + delta*mu leaves the
    provider's domain; DomainExhaustedError if no admissible direction is
    found.  ``eval_rng``, when given, must return a fresh generator per call;
    returning identical streams gives common random numbers across the base
    and perturbed evaluations.
    """
    theta = as_params(theta, fim_provider.dim)
    d = theta.size
    if not fim_provider.domain.contains(theta):
        raise ContractViolationError(f"theta={theta} outside evaluation domain")
    if eval_rng is None:
        root = int(rng.integers(0, 2**63 - 1))
        eval_rng = lambda: stream(root)  # noqa: E731  (identical stream per call: CRN)
    if base is None:
        base = fim_provider(theta, eval_rng())

    djs = np.zeros((d, d, d))
    for _ in range(cfg.direction_draws):
        for attempt in range(max_redraws + 1):
            mu = rng.standard_normal(d)
            if fim_provider.domain.contains(theta + cfg.delta * mu):
                break
        else:
            raise DomainExhaustedError(
                f"no admissible perturbation direction at theta={theta} "
                f"after {max_redraws} redraws (delta={cfg.delta})"
            )
        perturbed = fim_provider(theta + cfg.delta * mu, eval_rng())
        diff = (perturbed.entries - base.entries) / cfg.delta
        djs += mu[:, None, None] * diff[None, :, :]
    return djs / cfg.direction_draws


def evaluate_potential(
    fim_provider,
    theta,
    mode: GradientMode,
    cfg: OnePointConfig | None = None,
    rng: np.random.Generator | None = None,
) -> PotentialEvaluation:
    """Bundle V(theta) and grad V(theta) using the selected gradient route.

    ANALYTIC_TRACE requires the provider to expose ``fim_jacobian``; ONE_POINT
    estimates the jacobian by directional differences with one shared
    estimation substream for the base and perturbed FIM calls.
    SingularFimError propagates to the caller (samplers reject).
    """
    theta = as_params(theta, fim_provider.dim)
    if mode is GradientMode.ANALYTIC_TRACE:
        base = fim_provider(theta, rng)
        value = potential(base)
        grad = potential_gradient_analytic(base, fim_provider.fim_jacobian(theta))
        return PotentialEvaluation(value, grad, base, GradientMode.ANALYTIC_TRACE)

    if cfg is None or rng is None:
        raise ContractViolationError("one-point mode needs an OnePointConfig and an rng")
    root = int(rng.integers(0, 2**63 - 1))
    eval_rng = lambda: stream(root)  # noqa: E731
    base = fim_provider(theta, eval_rng())
    value = potential(base)
    djs = one_point_fim_derivative(
        fim_provider, theta, cfg, rng, base=base, eval_rng=eval_rng
    )
    grad = potential_gradient_analytic(base, djs)
    return PotentialEvaluation(value, grad, base, GradientMode.ONE_POINT)


@dataclass
class FimPotential:
    """Potential provider backed by a FIM provider, for the MALA driver.

    gradient_clip, when set, rescales gradients with norm above the bound
    (drift taming).  Estimated gradients have heavy tails; capping the drift
    keeps proposals inside sane ranges while leaving the sampled distribution
    untouched, because the Metropolis ratio is evaluated with the same tamed
    gradients on the forward and reverse moves.
    """

    fim_provider: object
    mode: GradientMode = GradientMode.ANALYTIC_TRACE
    one_point: OnePointConfig | None = None
    gradient_clip: float | None = None

    def __post_init__(self):
        if self.mode is GradientMode.ONE_POINT:
            if self.one_point is None:
                self.one_point = OnePointConfig()
            self.one_point.check(self.fim_provider.domain)
        if self.gradient_clip is not None and self.gradient_clip <= 0:
            raise ContractViolationError("gradient_clip must be positive")

    @property
    def dim(self) -> int:
        return self.fim_provider.dim

    def evaluate(self, theta, rng) -> PotentialEvaluation:
        ev = evaluate_potential(self.fim_provider, theta, self.mode, self.one_point, rng)
        if self.gradient_clip is not None:
            norm = float(np.linalg.norm(ev.gradient))
            if norm > self.gradient_clip:
                ev.gradient = ev.gradient * (self.gradient_clip / norm)
        return ev
