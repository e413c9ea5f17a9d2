"""Constrained Metropolis-adjusted Langevin sampler.

One iteration: propose by a single Euler-Maruyama step of the overdamped
Langevin dynamics, mask proposals leaving the constraint box (acceptance 0),
then Metropolis-correct.  All acceptance arithmetic stays in the log domain
and the acceptance probability is never exponentiated before the comparison
with log U.  The potential and gradient at the current state are evaluated
once per accepted state and frozen until the next acceptance, which keeps the
chain valid when the potential itself is a noisy estimate (the estimation
substream plays the role of the auxiliary variable of a pseudo-marginal
scheme).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .core import BoxConstraint, as_params
from .errors import ChainInitError, ContractViolationError, SingularFimError
from .fim import GradientMode, OnePointConfig, PotentialEvaluation
from .rng import stream

__all__ = [
    "SamplerConfig",
    "ChainState",
    "ChainResult",
    "CallablePotential",
    "ula_step",
    "log_proposal",
    "mala_acceptance",
    "constrained_acceptance",
    "run_chain",
]


def ula_step(theta, grad_v, tau: float, xi) -> np.ndarray:
    """One unadjusted Langevin update: theta - tau*grad_v + sqrt(2 tau)*xi."""
    theta = np.asarray(theta, dtype=np.float64)
    return theta - tau * np.asarray(grad_v) + np.sqrt(2.0 * tau) * np.asarray(xi)


def log_proposal(theta_to, theta_from, grad_v_from, tau: float) -> float:
    """Log Gaussian proposal kernel up to its theta-independent normalizer.

    -||theta_to - theta_from + tau*grad_v_from||^2 / (4 tau); the normalizer
    cancels in every acceptance ratio.
    """
    resid = (
        np.asarray(theta_to, dtype=np.float64)
        - np.asarray(theta_from, dtype=np.float64)
        + tau * np.asarray(grad_v_from, dtype=np.float64)
    )
    return -float(resid @ resid) / (4.0 * tau)


def log_accept_ratio(theta_p, theta, v_p, v, grad_p, grad, tau: float) -> float:
    """Log Metropolis-Hastings ratio for the Langevin proposal (unclipped)."""
    return (
        (v - v_p)
        + log_proposal(theta, theta_p, grad_p, tau)
        - log_proposal(theta_p, theta, grad, tau)
    )


def mala_acceptance(theta_p, theta, v_p, v, grad_p, grad, tau: float) -> float:
    """Acceptance probability min{1, e^{V-V'} q(theta|theta') / q(theta'|theta)}.

    Returns 0 for a non-finite proposal potential (singular information
    upstream).
    """
    if not np.isfinite(v_p):
        return 0.0
    return float(np.exp(min(0.0, log_accept_ratio(theta_p, theta, v_p, v, grad_p, grad, tau))))


def constrained_acceptance(rho: float, theta_p, constraint: BoxConstraint) -> float:
    """Mask the acceptance probability to 0 outside the constraint box."""
    if not 0.0 <= rho <= 1.0:
        raise ContractViolationError(f"acceptance probability {rho} outside [0, 1]")
    return rho if constraint.contains(np.asarray(theta_p, dtype=np.float64)) else 0.0


class PotentialProvider(Protocol):
    def evaluate(self, theta: np.ndarray, rng: np.random.Generator) -> PotentialEvaluation: ...


@dataclass
class CallablePotential:
    """Deterministic potential from plain callables (test targets)."""

    value_fn: Callable[[np.ndarray], float]
    grad_fn: Callable[[np.ndarray], np.ndarray]

    def evaluate(self, theta, rng=None) -> PotentialEvaluation:
        theta = np.asarray(theta, dtype=np.float64)
        return PotentialEvaluation(float(self.value_fn(theta)), np.atleast_1d(self.grad_fn(theta)))


@dataclass(frozen=True)
class SamplerConfig:
    """Chain settings.

    iterations is the total number of proposals; the first burn_in states are
    discarded (default iterations // 10).  gradient_mode / one_point describe
    how the potential provider obtains gradients and are recorded alongside
    results; step_size stays fixed for the whole run.
    """

    step_size: float
    iterations: int
    constraint: BoxConstraint
    burn_in: int | None = None
    gradient_mode: GradientMode = GradientMode.ANALYTIC_TRACE
    one_point: OnePointConfig | None = None
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.step_size) and self.step_size > 0):
            raise ContractViolationError(f"step_size must be positive, got {self.step_size}")
        if self.iterations < 1:
            raise ContractViolationError("iterations must be >= 1")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.iterations // 10)
        if not 0 <= self.burn_in < self.iterations:
            raise ContractViolationError(
                f"need 0 <= burn_in < iterations, got {self.burn_in} / {self.iterations}"
            )


@dataclass
class ChainState:
    """Current position with its cached potential evaluation."""

    position: np.ndarray
    potential: PotentialEvaluation
    iteration: int = 0


@dataclass
class ChainResult:
    """Retained samples plus acceptance bookkeeping for one chain."""

    samples: np.ndarray
    accept_count: int
    proposal_count: int
    rejected_out_of_bounds: int
    rejected_singular: int
    seed: int

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.proposal_count


def run_chain(cfg: SamplerConfig, theta0, potential_provider) -> ChainResult:
    """Run the constrained MALA chain and return the post-burn-in trajectory.

    Each iteration proposes once; out-of-bounds or singular-information
    proposals are rejected and still consume the iteration, so on rejection
    the state repeats exactly.  Randomness comes from three substreams of
    cfg.seed (proposal noise, acceptance uniforms, potential estimation), so
    reruns with the same config are bit-reproducible.
    """
    box = cfg.constraint
    theta = as_params(theta0, box.dim)
    if not box.contains(theta):
        raise ContractViolationError(f"theta0={theta} violates the sampling constraint")

    noise_rng = stream(cfg.seed, 0)
    accept_rng = stream(cfg.seed, 1)
    pot_rng = stream(cfg.seed, 2)

    try:
        current = potential_provider.evaluate(theta, pot_rng)
    except SingularFimError as exc:
        raise ChainInitError(f"potential not evaluable at theta0={theta}: {exc}") from exc

    tau = cfg.step_size
    sqrt2tau = np.sqrt(2.0 * tau)
    kept = cfg.iterations - cfg.burn_in
    samples = np.empty((kept, box.dim))
    accepted = 0
    out_of_bounds = 0
    singular = 0

    for n in range(cfg.iterations):
        xi = noise_rng.standard_normal(box.dim)
        log_u = np.log(accept_rng.uniform())
        proposal = theta - tau * current.gradient + sqrt2tau * xi

        if not box.contains(proposal):
            out_of_bounds += 1
        else:
            try:
                cand = potential_provider.evaluate(proposal, pot_rng)
            except SingularFimError:
                cand = None
                singular += 1
            if cand is not None and np.isfinite(cand.value):
                log_rho = log_accept_ratio(
                    proposal, theta, cand.value, current.value,
                    cand.gradient, current.gradient, tau,
                )
                if log_u < log_rho:
                    theta = proposal
                    current = cand
                    accepted += 1

        if n >= cfg.burn_in:
            samples[n - cfg.burn_in] = theta

    # hard invariant: nothing stored may leave the constraint box
    assert np.all(samples >= box.lower) and np.all(samples <= box.upper)
    return ChainResult(
        samples=samples,
        accept_count=accepted,
        proposal_count=cfg.iterations,
        rejected_out_of_bounds=out_of_bounds,
        rejected_singular=singular,
        seed=cfg.seed,
    )
