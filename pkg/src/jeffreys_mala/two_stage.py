"""Two-stage simulation-based estimator: compress datasets to fixed summary
features, then regress parameters on features over a synthetic training set.

theta_hat(y) = g(h(y)) with h a fixed log-domain summary (the Weibull family
is log-location-scale, so these are near-sufficient) and g a k-nearest-
neighbour regression with inverse-distance weights on standardized features.
Training sets drawn from different priors share everything else (sizes, k,
seed schedule), which is what the prior-comparison experiment relies on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .core import ObservationBatch
from .errors import ContractViolationError, SupportError

__all__ = [
    "TrainingPair",
    "TsEstimator",
    "TsRunConfig",
    "compress",
    "fit",
    "evaluate",
    "EvaluationReport",
    "build_training_set",
]

_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)
N_FEATURES = 2 + len(_QUANTILES)


@dataclass
class TrainingPair:
    """One synthetic (parameter, feature) record."""

    theta: np.ndarray
    features: np.ndarray


def compress(y) -> np.ndarray:
    """Fixed compression h(y): log-domain summary statistics.

    [mean(ln y), std(ln y), ln q_{0.1}, ln q_{0.25}, ln q_{0.5}, ln q_{0.75},
    ln q_{0.9}] — seven features; scale acts as a common shift on everything
    except the std.
    """
    if isinstance(y, ObservationBatch):
        y = y.observations
    a = np.asarray(y, dtype=np.float64).ravel()
    if a.size < 10:
        raise ContractViolationError("need at least 10 observations to compress")
    if np.any(a <= 0.0):
        raise SupportError("compression is defined for positive observations")
    log_a = np.log(a)
    quantiles = np.log(np.quantile(a, _QUANTILES))
    return np.concatenate(([log_a.mean(), log_a.std()], quantiles))


@dataclass
class TsEstimator:
    """k-NN regression from standardized features to parameters."""

    training_features: np.ndarray  # (M, p), standardized
    training_thetas: np.ndarray  # (M, d)
    feature_means: np.ndarray
    feature_scales: np.ndarray
    k: int

    def predict(self, features) -> np.ndarray:
        f = (np.asarray(features, dtype=np.float64) - self.feature_means) / self.feature_scales
        d2 = np.sum((self.training_features - f) ** 2, axis=1)
        idx = np.argpartition(d2, self.k - 1)[: self.k]
        dist = np.sqrt(d2[idx])
        if np.any(dist == 0.0):
            exact = idx[dist == 0.0]
            return self.training_thetas[exact].mean(axis=0)
        w = 1.0 / dist
        return (w @ self.training_thetas[idx]) / w.sum()


def fit(pairs: list[TrainingPair], k: int) -> TsEstimator:
    """Standardize the features and freeze a k-NN estimator over the pairs."""
    if not pairs:
        raise ContractViolationError("empty training set")
    if not 1 <= k <= len(pairs):
        raise ContractViolationError(f"need 1 <= k <= {len(pairs)}, got {k}")
    feats = np.stack([p.features for p in pairs])
    thetas = np.stack([p.theta for p in pairs])
    means = feats.mean(axis=0)
    scales = feats.std(axis=0)
    scales[scales == 0.0] = 1.0
    return TsEstimator((feats - means) / scales, thetas, means, scales, int(k))


@dataclass
class EvaluationReport:
    """Per-point estimates plus component RMSEs (overall and low-shape slice)."""

    true_thetas: np.ndarray  # (L, d)
    estimates: np.ndarray  # (L, d)
    rmse: np.ndarray  # (d,)
    rmse_low_shape: np.ndarray  # (d,) restricted to gamma < shape_cut
    shape_cut: float


def evaluate(est: TsEstimator, validation, shape_cut: float = 5.0) -> EvaluationReport:
    """Estimate every validation (theta, y) pair and summarize RMSEs.

    ``validation`` is an iterable of (theta, observations); the low-shape RMSE
    restricts to points with the shape component (last coordinate) below
    ``shape_cut``.
    """
    thetas, estimates = [], []
    for theta, y in validation:
        thetas.append(np.asarray(theta, dtype=np.float64))
        estimates.append(est.predict(compress(y)))
    if not thetas:
        raise ContractViolationError("empty validation set")
    true_t = np.stack(thetas)
    est_t = np.stack(estimates)
    err2 = (est_t - true_t) ** 2
    low = true_t[:, -1] < shape_cut
    rmse_low = (
        np.sqrt(err2[low].mean(axis=0)) if np.any(low) else np.full(true_t.shape[1], np.nan)
    )
    return EvaluationReport(true_t, est_t, np.sqrt(err2.mean(axis=0)), rmse_low, shape_cut)


@dataclass(frozen=True)
class TsRunConfig:
    """Shared settings for one estimator build; only the prior sampler varies
    between the compared estimators, asserted via the config hash."""

    n_train: int = 1000
    n_obs: int = 200
    k: int = 5
    seed: int = 0

    def digest(self) -> str:
        payload = json.dumps(
            {"n_train": self.n_train, "n_obs": self.n_obs, "k": self.k, "seed": self.seed},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


def build_training_set(model, thetas, cfg: TsRunConfig, rng_for) -> list[TrainingPair]:
    """Simulate one dataset per training parameter and compress it.

    ``rng_for(i)`` must return the stream for the i-th pair, so the data-draw
    schedule is identical across priors given the same cfg.seed.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    if thetas.shape[0] != cfg.n_train:
        raise ContractViolationError(
            f"expected {cfg.n_train} training parameters, got {thetas.shape[0]}"
        )
    pairs = []
    for i, theta in enumerate(thetas):
        batch = model.simulate(theta, cfg.n_obs, rng_for(i))
        pairs.append(TrainingPair(theta.copy(), compress(batch)))
    return pairs
