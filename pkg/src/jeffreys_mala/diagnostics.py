"""Chain and density diagnostics: histograms, TV distance, ESS, gradient checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, SingularFimError

__all__ = [
    "BinnedDensity",
    "histogram",
    "tv_distance",
    "reference_density",
    "effective_sample_size",
    "fd_gradient_check",
]


@dataclass
class BinnedDensity:
    """Probability mass on a fixed grid of bins (right-closed final bin)."""

    edges: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        mass = np.asarray(self.mass, dtype=np.float64)
        if edges.ndim != 1 or mass.ndim != 1 or edges.size != mass.size + 1:
            raise ContractViolationError("need len(edges) == len(mass) + 1")
        if not np.all(np.diff(edges) > 0):
            raise ContractViolationError("bin edges must be strictly increasing")
        if np.any(mass < 0) or abs(mass.sum() - 1.0) > 1e-12:
            raise ContractViolationError(f"masses must be >= 0 and sum to 1, got sum {mass.sum()}")
        self.edges, self.mass = edges, mass


def histogram(samples, bins: int, value_range: tuple[float, float]) -> BinnedDensity:
    """Normalized bin masses of the samples over [lo, hi].

    Samples outside the range violate the contract (chains guarantee
    constraint membership, so an out-of-range sample is a bug upstream).
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    lo, hi = float(value_range[0]), float(value_range[1])
    if x.size == 0:
        raise ContractViolationError("empty sample list")
    if bins < 2:
        raise ContractViolationError("need at least 2 bins")
    if lo >= hi:
        raise ContractViolationError(f"need lo < hi, got ({lo}, {hi})")
    if x.min() < lo or x.max() > hi:
        raise ContractViolationError(
            f"samples outside range: [{x.min()}, {x.max()}] vs [{lo}, {hi}]"
        )
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    return BinnedDensity(edges, counts / x.size)


def tv_distance(a: BinnedDensity, b: BinnedDensity) -> float:
    """Total variation distance, half the L1 distance between bin masses."""
    if a.edges.shape != b.edges.shape or not np.array_equal(a.edges, b.edges):
        raise ContractViolationError("binned densities must share identical edges")
    return 0.5 * float(np.abs(a.mass - b.mass).sum())


def reference_density(grid, fim_curve, bins: int) -> BinnedDensity:
    """Bin the normalized sqrt-information density sqrt(J(theta)) over the grid.

    The curve is normalized by trapezoidal quadrature over the grid's span and
    integrated per bin through the interpolated CDF, so the output masses sum
    to 1 exactly.
    """
    g = np.asarray(grid, dtype=np.float64)
    j = np.asarray(fim_curve, dtype=np.float64)
    if g.ndim != 1 or g.size < 2 or g.shape != j.shape:
        raise ContractViolationError("grid and fim_curve must be equal-length 1-D, size >= 2")
    if not np.all(np.diff(g) > 0):
        raise ContractViolationError("grid must be strictly increasing")
    if np.any(~np.isfinite(j)) or np.any(j <= 0):
        raise SingularFimError("fim_curve must be finite and strictly positive on the grid")

    density = np.sqrt(j)
    # cumulative trapezoid of the unnormalized density, then CDF at bin edges
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(g))))
    cdf = cum / cum[-1]
    edges = np.linspace(g[0], g[-1], bins + 1)
    mass = np.diff(np.interp(edges, g, cdf))
    mass = np.maximum(mass, 0.0)
    mass /= mass.sum()
    return BinnedDensity(edges, mass)


def effective_sample_size(chain) -> float:
    """ESS = N / (1 + 2 sum rho_k) with initial-positive-sequence truncation.

    Autocorrelations are summed in consecutive pairs until a pair sum turns
    non-positive.  A zero-variance chain has ESS 0 by convention.
    """
    x = np.asarray(chain, dtype=np.float64).ravel()
    n = x.size
    if n < 10:
        raise ContractViolationError("need at least 10 samples for an ESS estimate")
    x = x - x.mean()
    var = float(x @ x) / n
    if var == 0.0:
        return 0.0
    # autocovariance via FFT
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real / n
    rho = acov / acov[0]

    tail = 0.0
    for m in range(1, (n - 1) // 2 + 1):
        pair = rho[2 * m - 1] + rho[2 * m]
        if pair <= 0.0:
            break
        tail += pair
    return n / (1.0 + 2.0 * tail)


def fd_gradient_check(potential_provider, theta, h: float, rng=None) -> np.ndarray:
    """Componentwise relative error of the provider's gradient vs central differences."""
    theta = np.asarray(theta, dtype=np.float64)
    ev = potential_provider.evaluate(theta, rng)
    errors = np.empty(theta.size)
    for j in range(theta.size):
        step = np.zeros_like(theta)
        step[j] = h
        v_plus = potential_provider.evaluate(theta + step, rng).value
        v_minus = potential_provider.evaluate(theta - step, rng).value
        fd = (v_plus - v_minus) / (2.0 * h)
        errors[j] = abs(ev.gradient[j] - fd) / (abs(fd) + 1e-12)
    return errors
