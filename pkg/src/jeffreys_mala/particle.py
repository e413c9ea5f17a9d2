"""Bootstrap particle filtering, backward smoothing and score/FIM estimation
for nonlinear state-space models.

Conventions: a length-T observation batch pairs y[k] with the state at slice
k+1 and input u[k] with the transition from slice k to k+1; slice 0 holds the
unweighted initial particles, so a ParticleSystem has T+1 slices.  Filters
resample systematically every step and store the post-weighting (pre-resampling)
normalized weights, which is what the backward pass consumes.

Two score estimators share the Fisher identity (the data score equals the
smoothed expectation of the complete-data score):

* ``ffbsm_smooth`` + ``fisher_identity_score`` — backward-reweighting
  (O(N_p^2) per step) marginal/pairwise smoothing expectations; the accurate
  route, used for reference curves and validation.
* ``filter_score`` — O(N_p) genealogy accumulators (per-particle cumulative
  score functionals copied along resampling ancestry); noisier for long
  series but cheap enough to sit inside a sampling loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .core import BoxConstraint, ObservationBatch, as_params
from .errors import (
    ContractViolationError,
    DegenerateFilterError,
    DegenerateSmootherError,
    EstimationFailedError,
)
from .fim import FimSource, FisherMatrix

__all__ = [
    "GaussianTransition",
    "NlssModel",
    "ParticleSystem",
    "SmoothedWeights",
    "systematic_resample",
    "bootstrap_filter",
    "ffbsm_smooth",
    "fisher_identity_score",
    "ffbsm_score",
    "filter_score",
    "pf_fim_estimate",
    "PfFimProvider",
]


@dataclass
class GaussianTransition:
    """Fast-path description of a univariate Gaussian transition kernel.

    mean(x, u, theta) -> per-particle transition means; var(theta) -> scalar
    variance; score_coeffs(x, u, theta) -> (d, 3, n) polynomial coefficients
    (c0, c1, c2) such that the transition score component is
    c0 + c1*x_next + c2*x_next^2 for each ancestor particle.
    """

    mean: Callable
    var: Callable
    score_coeffs: Callable


@dataclass
class NlssModel:
    """State-space model surface consumed by the filter and smoother.

    The density/score callables must accept broadcast array arguments.
    observation_score may be None when the observation density does not
    depend on theta.  gaussian_transition / filter_kernel enable the fused
    numba fast paths; the generic numpy paths are used otherwise.
    """

    dim: int
    transition_logdensity: Callable  # (x_next, x, u, theta) -> array
    observation_logdensity: Callable  # (y, x, theta) -> array
    transition_score: Callable  # (x_next, x, u, theta) -> (dim, ...) array
    initial_sampler: Callable  # (theta, n, rng) -> (n,) array
    transition_sampler: Callable  # (x, u, theta, rng) -> array
    observation_score: Callable | None = None
    gaussian_transition: GaussianTransition | None = None
    filter_kernel: Callable | None = None  # (y, u, theta, n_p, rng) -> (score, loglik, fail_t)


@dataclass
class ParticleSystem:
    """Forward-filter output: particles, normalized weights, ancestry, loglik."""

    particles: np.ndarray  # (T+1, N)
    filter_weights: np.ndarray  # (T+1, N)
    ancestors: np.ndarray  # (T+1, N) int64; slice 0 is arange
    loglik: float

    @property
    def n_steps(self) -> int:
        return self.particles.shape[0] - 1

    @property
    def n_particles(self) -> int:
        return self.particles.shape[1]


@dataclass
class SmoothedWeights:
    """Marginal smoothing weights w_{t|T} for every slice."""

    marginal: np.ndarray  # (T+1, N)


def systematic_resample(weights, rng) -> np.ndarray:
    """Systematic (low-variance) resampling; returns ancestor indices."""
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    positions = (rng.uniform() + np.arange(n)) / n
    return np.minimum(np.searchsorted(np.cumsum(w), positions), n - 1)


def _sorted_systematic(x, w, rng) -> np.ndarray:
    """Systematic resampling along the particle order statistic.

    Quantile-coupled ancestry varies smoothly under small parameter
    perturbations with shared random numbers; same resampled measure as
    ``systematic_resample``.
    """
    n = w.size
    order = np.argsort(x)
    positions = (rng.uniform() + np.arange(n)) / n
    sel = np.minimum(np.searchsorted(np.cumsum(w[order]), positions), n - 1)
    return order[sel]


def _inputs(batch: ObservationBatch) -> np.ndarray:
    if batch.inputs is None:
        return np.zeros(len(batch))
    return np.asarray(batch.inputs, dtype=np.float64)


def bootstrap_filter(
    model: NlssModel, theta, batch: ObservationBatch, n_particles: int, rng
) -> ParticleSystem:
    """Bootstrap filter: propagate through the transition, weight by the
    observation density, resample systematically every step.

    loglik accumulates log( mean of unnormalized weights ) per step.  Raises
    DegenerateFilterError (with the failing step) when every weight
    underflows.
    """
    if n_particles < 2:
        raise ContractViolationError("need at least 2 particles for resampling")
    theta = as_params(theta, model.dim)
    y = np.asarray(batch.observations, dtype=np.float64)
    u = _inputs(batch)
    t_len = y.shape[0]

    particles = np.empty((t_len + 1, n_particles))
    weights = np.empty((t_len + 1, n_particles))
    ancestors = np.empty((t_len + 1, n_particles), dtype=np.int64)

    x = np.asarray(model.initial_sampler(theta, n_particles, rng), dtype=np.float64)
    w = np.full(n_particles, 1.0 / n_particles)
    particles[0], weights[0], ancestors[0] = x, w, np.arange(n_particles)

    loglik = 0.0
    for k in range(t_len):
        anc = _sorted_systematic(x, w, rng)
        x = np.asarray(model.transition_sampler(x[anc], u[k], theta, rng), dtype=np.float64)
        logw = np.asarray(model.observation_logdensity(y[k], x, theta), dtype=np.float64)
        top = np.max(logw)
        if not np.isfinite(top):
            raise DegenerateFilterError(k + 1)
        w = np.exp(logw - top)
        total = w.sum()
        loglik += top + np.log(total / n_particles)
        w /= total
        particles[k + 1], weights[k + 1], ancestors[k + 1] = x, w, anc

    return ParticleSystem(particles, weights, ancestors, float(loglik))


def _pairwise_density(model, x_from, x_to, u_t, theta):
    """f(x_to[j] | x_from[i], u_t) as an (n, n) matrix, column-rescaled for
    stability (ratios are invariant to per-column scaling)."""
    logf = np.asarray(
        model.transition_logdensity(x_to[None, :], x_from[:, None], u_t, theta),
        dtype=np.float64,
    )
    logf = logf - logf.max(axis=0, keepdims=True)
    return np.exp(logf)


def ffbsm_smooth(
    ps: ParticleSystem, model: NlssModel, theta, batch: ObservationBatch
) -> SmoothedWeights:
    """Backward marginal reweighting:

        w_{t|T}^i = w_t^i * sum_j [ w_{t+1|T}^j f(x_{t+1}^j | x_t^i)
                                    / sum_l w_t^l f(x_{t+1}^j | x_t^l) ]

    with w_{T|T} = w_T.  Raises DegenerateSmootherError on a vanishing
    denominator.
    """
    theta = as_params(theta, model.dim)
    u = _inputs(batch)
    t_len = ps.n_steps
    marginal = np.empty_like(ps.filter_weights)
    marginal[t_len] = ps.filter_weights[t_len]
    for t in range(t_len - 1, -1, -1):
        f = _pairwise_density(model, ps.particles[t], ps.particles[t + 1], u[t], theta)
        denom = ps.filter_weights[t] @ f
        if np.any(denom <= 0.0) or not np.all(np.isfinite(denom)):
            raise DegenerateSmootherError(f"vanishing backward denominator at step {t}")
        marginal[t] = ps.filter_weights[t] * (f @ (marginal[t + 1] / denom))
    return SmoothedWeights(marginal)


def fisher_identity_score(
    sw: SmoothedWeights, ps: ParticleSystem, model: NlssModel, theta, batch: ObservationBatch
) -> np.ndarray:
    """Data score estimate: smoothed expectation of the complete-data score.

    Transition terms use the pairwise reweighting implied by the backward
    recursion; observation terms use the marginal smoothing weights.  The
    initial-density term is not included.
    """
    theta = as_params(theta, model.dim)
    y = np.asarray(batch.observations, dtype=np.float64)
    u = _inputs(batch)
    t_len = ps.n_steps
    score = np.zeros(model.dim)
    for t in range(t_len):
        x_t, x_n = ps.particles[t], ps.particles[t + 1]
        f = _pairwise_density(model, x_t, x_n, u[t], theta)
        denom = ps.filter_weights[t] @ f
        if np.any(denom <= 0.0) or not np.all(np.isfinite(denom)):
            raise DegenerateSmootherError(f"vanishing backward denominator at step {t}")
        pair = (ps.filter_weights[t][:, None] * f) * (sw.marginal[t + 1] / denom)[None, :]
        s_tr = np.asarray(model.transition_score(x_n[None, :], x_t[:, None], u[t], theta))
        score += np.einsum("ij,dij->d", pair, s_tr)
        if model.observation_score is not None:
            s_obs = np.asarray(model.observation_score(y[t], x_n, theta))
            score += s_obs @ sw.marginal[t + 1]
    return score


def ffbsm_score(
    ps: ParticleSystem, model: NlssModel, theta, batch: ObservationBatch
) -> np.ndarray:
    """Fused backward smoothing + score accumulation (single backward pass).

    Requires the model's gaussian_transition fast-path description; the
    pairwise expectations reduce to the 0th/1st/2nd moments of x_{t+1} under
    the pairwise weights, computed by the numba kernel.  Agrees with
    ffbsm_smooth + fisher_identity_score to floating-point accuracy.
    """
    gt = model.gaussian_transition
    if gt is None:
        sw = ffbsm_smooth(ps, model, theta, batch)
        return fisher_identity_score(sw, ps, model, theta, batch)

    theta = as_params(theta, model.dim)
    y = np.asarray(batch.observations, dtype=np.float64)
    u = _inputs(batch)
    t_len, n = ps.n_steps, ps.n_particles
    inv2q = 0.5 / float(gt.var(theta))

    f = np.empty((n, n))
    r0 = np.empty(n)
    r1 = np.empty(n)
    r2 = np.empty(n)
    score = np.zeros(model.dim)
    sm_next = ps.filter_weights[t_len].copy()

    for t in range(t_len - 1, -1, -1):
        if model.observation_score is not None:
            s_obs = np.asarray(model.observation_score(y[t], ps.particles[t + 1], theta))
            score += s_obs @ sm_next
        mean = np.asarray(gt.mean(ps.particles[t], u[t], theta), dtype=np.float64)
        fail = _kernels.smoothing_step(
            ps.particles[t + 1], mean, ps.filter_weights[t], sm_next, inv2q, f, r0, r1, r2
        )
        if fail >= 0:
            raise DegenerateSmootherError(f"vanishing backward denominator at step {t}")
        coeffs = np.asarray(gt.score_coeffs(ps.particles[t], u[t], theta))
        score += coeffs[:, 0, :] @ r0 + coeffs[:, 1, :] @ r1 + coeffs[:, 2, :] @ r2
        sm_next = r0.copy()
    return score


def filter_score(
    model: NlssModel, theta, batch: ObservationBatch, n_particles: int, rng
) -> tuple[np.ndarray, float]:
    """Genealogy-tracking filter: score and log-likelihood in one O(N_p T) pass.

    Each particle carries the cumulative complete-data score along its
    ancestral path; the estimate is the weighted average at the final step.
    Dispatches to the model's jitted kernel when available.
    """
    if n_particles < 2:
        raise ContractViolationError("need at least 2 particles for resampling")
    theta = as_params(theta, model.dim)
    y = np.asarray(batch.observations, dtype=np.float64)
    u = _inputs(batch)

    if model.filter_kernel is not None:
        score, loglik, fail = model.filter_kernel(y, u, theta, int(n_particles), rng)
        if fail >= 0:
            raise DegenerateFilterError(int(fail) + 1)
        return np.atleast_1d(np.asarray(score, dtype=np.float64)), float(loglik)

    n = n_particles
    x = np.asarray(model.initial_sampler(theta, n, rng), dtype=np.float64)
    alpha = np.zeros((model.dim, n))
    w = np.full(n, 1.0 / n)
    loglik = 0.0
    for k in range(y.shape[0]):
        anc = _sorted_systematic(x, w, rng)
        x_prev = x[anc]
        alpha = alpha[:, anc]
        x = np.asarray(model.transition_sampler(x_prev, u[k], theta, rng), dtype=np.float64)
        alpha += np.asarray(model.transition_score(x, x_prev, u[k], theta))
        if model.observation_score is not None:
            alpha += np.asarray(model.observation_score(y[k], x, theta))
        logw = np.asarray(model.observation_logdensity(y[k], x, theta), dtype=np.float64)
        top = np.max(logw)
        if not np.isfinite(top):
            raise DegenerateFilterError(k + 1)
        w = np.exp(logw - top)
        total = w.sum()
        loglik += top + np.log(total / n)
        w /= total
    return alpha @ w, float(loglik)


def pf_fim_estimate(
    model,
    theta,
    t_len: int,
    n_particles: int,
    mc_runs: int,
    rng,
    smoother: str = "ffbsm",
) -> FisherMatrix:
    """Per-sample information estimate from simulated datasets.

    Simulates ``mc_runs`` independent datasets at theta (split streams),
    estimates the data score for each, and returns the average score outer
    product divided by the series length.  Replicates whose filter degenerates
    are dropped; more than half dropped raises EstimationFailedError.

    smoother: "ffbsm" (backward-reweighted, accurate) or "genealogy" (O(N_p),
    chain-time cheap).
    """
    if mc_runs < 1:
        raise ContractViolationError("mc_runs must be >= 1")
    if smoother not in ("ffbsm", "genealogy"):
        raise ContractViolationError(f"unknown smoother {smoother!r}")
    theta = as_params(theta, model.dim)
    nlss = model.nlss
    outer = np.zeros((model.dim, model.dim))
    dropped = 0
    for child in rng.spawn(mc_runs):
        batch = model.simulate(theta, t_len, child)
        try:
            if smoother == "genealogy":
                s, _ = filter_score(nlss, theta, batch, n_particles, child)
            else:
                ps = bootstrap_filter(nlss, theta, batch, n_particles, child)
                s = ffbsm_score(ps, nlss, theta, batch)
        except DegenerateFilterError:
            dropped += 1
            continue
        outer += np.outer(s, s)
    kept = mc_runs - dropped
    if dropped > mc_runs // 2 or kept == 0:
        raise EstimationFailedError(
            f"{dropped}/{mc_runs} replicate filters degenerated at theta={theta}"
        )
    return FisherMatrix(outer / (kept * t_len), FimSource.PARTICLE_FILTER)


@dataclass
class PfFimProvider:
    """FIM provider backed by particle-filter score estimation."""

    model: object
    domain: BoxConstraint
    t_len: int
    n_particles: int
    mc_runs: int = 1
    smoother: str = "genealogy"

    @property
    def dim(self) -> int:
        return self.model.dim

    def __call__(self, theta, rng) -> FisherMatrix:
        return pf_fim_estimate(
            self.model, theta, self.t_len, self.n_particles, self.mc_runs, rng,
            smoother=self.smoother,
        )
