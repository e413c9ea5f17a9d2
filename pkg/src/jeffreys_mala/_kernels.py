"""Numba kernels for the particle-filter hot paths.

Two things live here: the fused backward-smoothing + pairwise-moment step
(O(N^2) per time step, dominated by the elementwise exponential, which is
implemented as a branch-free polynomial so LLVM can vectorize it), and fully
jitted filter loops with genealogy score accumulators for the two bundled
state-space models.  Results are independent of scheduling: everything is
sequential with fixed summation order, and generators passed in are consumed
in a fixed call order.

Filters resample systematically along the particle order statistic
(quantile-coupled ancestry), which keeps the filter output a smooth function
of the parameter under shared random numbers; the directional-difference
gradient estimates depend on that.  The ascending order is maintained with an
O(N) bucket sort (new particles are noisy perturbations of an already sorted
set) plus an insertion fix-up.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "ar1_path",
    "smoothing_step",
    "sv_filter_score",
    "lgss_filter_score",
]

_LOG2E = 1.4426950408889634
_LN2 = 0.6931471805599453
_EXP_C = (
    1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0, 1.0 / 120.0, 1.0 / 720.0,
    1.0 / 5040.0, 1.0 / 40320.0,
)


@njit(cache=True)
def ar1_path(x0, shocks, coef):
    """x_t = coef * x_{t-1} + shocks[t-1] for t = 1..len(shocks); returns x_1.."""
    n = shocks.shape[0]
    out = np.empty(n)
    prev = x0
    for t in range(n):
        prev = coef * prev + shocks[t]
        out[t] = prev
    return out


@njit(cache=True, fastmath=True)
def _exp_rows(arg, ebits, poly):
    """exp(arg) elementwise via 2^k * p(r) with |r| <= ln2/2, arg clamped to ±700.

    Relative accuracy ~3e-10; writes the result into ``arg``.  Avoids libm so
    the loop vectorizes.
    """
    n = arg.shape[0]
    for j in range(n):
        x = arg[j]
        if x < -700.0:
            x = -700.0
        elif x > 700.0:
            x = 700.0
        kf = np.rint(x * _LOG2E)
        r = x - kf * _LN2
        p = _EXP_C[8]
        p = _EXP_C[7] + r * p
        p = _EXP_C[6] + r * p
        p = _EXP_C[5] + r * p
        p = _EXP_C[4] + r * p
        p = _EXP_C[3] + r * p
        p = _EXP_C[2] + r * p
        p = _EXP_C[1] + r * p
        p = _EXP_C[0] + r * p
        ebits[j] = (np.int64(kf) + 1023) << 52
        poly[j] = p
    scale = ebits.view(np.float64)
    for j in range(n):
        arg[j] = poly[j] * scale[j]


@njit(cache=True, fastmath=True)
def smoothing_step(x_next, mean, w, sm_next, inv2q, f, r0, r1, r2):
    """One backward reweighting step for a univariate Gaussian transition.

    With f_ij = exp(-(x_next[j] - mean[i])^2 * inv2q) (normalizer cancels),
    D_j = sum_l w[l] f_lj and P_ij = w[i] f_ij sm_next[j] / D_j, fills

        r0[i] = sum_j P_ij            (the smoothed weight at time t)
        r1[i] = sum_j P_ij x_next[j]
        r2[i] = sum_j P_ij x_next[j]^2

    so any per-pair functional quadratic in x_next reduces to moments.
    Returns the index of the first vanishing denominator, or -1.
    """
    n = x_next.shape[0]
    d = np.zeros(n)
    ebits = np.empty(n, np.int64)
    poly = np.empty(n)
    for i in range(n):
        mi = mean[i]
        row = f[i]
        for j in range(n):
            u = x_next[j] - mi
            row[j] = -u * u * inv2q
        _exp_rows(row, ebits, poly)
        wi = w[i]
        for j in range(n):
            d[j] += wi * row[j]
    for j in range(n):
        if d[j] <= 0.0 or not np.isfinite(d[j]):
            return j
        d[j] = sm_next[j] / d[j]
    for i in range(n):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        row = f[i]
        for j in range(n):
            p = row[j] * d[j]
            xj = x_next[j]
            s0 += p
            s1 += p * xj
            s2 += p * xj * xj
        wi = w[i]
        r0[i] = wi * s0
        r1[i] = wi * s1
        r2[i] = wi * s2
    return -1


@njit(cache=True)
def _bucket_argsort(x, order, counts):
    """Ascending argsort of x into ``order``: O(N) bucket scatter plus an
    insertion fix-up (fast for the nearly-bucket-sorted data filters produce).
    ``counts`` is an int64 scratch array of length len(x) + 1."""
    n = x.shape[0]
    lo = x[0]
    hi = x[0]
    for i in range(1, n):
        v = x[i]
        if v < lo:
            lo = v
        elif v > hi:
            hi = v
    if hi <= lo:
        for i in range(n):
            order[i] = i
        return
    scale = (n - 1) / (hi - lo)
    for b in range(n + 1):
        counts[b] = 0
    for i in range(n):
        b = np.int64((x[i] - lo) * scale)
        if b > n - 1:
            b = n - 1
        counts[b + 1] += 1
    for b in range(1, n + 1):
        counts[b] += counts[b - 1]
    for i in range(n):
        b = np.int64((x[i] - lo) * scale)
        if b > n - 1:
            b = n - 1
        order[counts[b]] = i
        counts[b] += 1
    for i in range(1, n):
        oi = order[i]
        xi = x[oi]
        j = i - 1
        while j >= 0 and x[order[j]] > xi:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = oi


@njit(cache=True)
def _systematic_by_order(w, order, u0, anc):
    """Systematic resampling walking the cumulative weights in ``order``;
    fills ``anc`` with selected particle indices, nondecreasing in order."""
    n = w.shape[0]
    c = w[order[0]]
    j = 0
    for i in range(n):
        pos = (u0 + i) / n
        while c < pos and j < n - 1:
            j += 1
            c += w[order[j]]
        anc[i] = order[j]


@njit(cache=True, fastmath=True)
def sv_filter_score(y, u, phi, rho, sig_v, beta, n_p, rng):
    """Bootstrap filter with genealogy score accumulator for the log-volatility model.

    Returns (score_wrt_phi, loglik, fail_t); fail_t >= 0 flags the step where
    every weight underflowed.  Consumes rng as: initial normals(n_p), then per
    step uniform() + normals(n_p).
    """
    t_len = y.shape[0]
    inv_q = 1.0 / (sig_v * sig_v)
    lb2 = np.log(beta * beta)
    inv_b2 = 1.0 / (beta * beta)
    c_half = 0.5 * np.log(2.0 * np.pi)

    x = (sig_v / np.sqrt(1.0 - phi * phi)) * rng.standard_normal(n_p)
    alpha = np.zeros(n_p)
    w = np.full(n_p, 1.0 / n_p)
    order = np.empty(n_p, np.int64)
    counts = np.empty(n_p + 1, np.int64)
    anc = np.empty(n_p, np.int64)
    x_new = np.empty(n_p)
    a_new = np.empty(n_p)
    logw = np.empty(n_p)
    ebits = np.empty(n_p, np.int64)
    poly = np.empty(n_p)
    loglik = 0.0
    _bucket_argsort(x, order, counts)

    for k in range(t_len):
        u0 = rng.uniform(0.0, 1.0)
        _systematic_by_order(w, order, u0, anc)
        noise = rng.standard_normal(n_p)
        uk = u[k]
        yk2h = 0.5 * y[k] * y[k] * inv_b2
        for i in range(n_p):
            xa = x[anc[i]]
            m = phi * xa + rho * uk
            xn = m + sig_v * noise[i]
            x_new[i] = xn
            a_new[i] = alpha[anc[i]] + (xn - m) * xa * inv_q
            logw[i] = -xn
        _exp_rows(logw, ebits, poly)  # logw now holds exp(-x_new)
        mx = -np.inf
        for i in range(n_p):
            lw = -c_half - 0.5 * (lb2 + x_new[i]) - yk2h * logw[i]
            logw[i] = lw
            if lw > mx:
                mx = lw
        if not np.isfinite(mx):
            return 0.0, np.nan, k
        for i in range(n_p):
            logw[i] -= mx
        _exp_rows(logw, ebits, poly)
        s = 0.0
        for i in range(n_p):
            s += logw[i]
        loglik += mx + np.log(s / n_p)
        for i in range(n_p):
            w[i] = logw[i] / s
        x, x_new = x_new, x
        alpha, a_new = a_new, alpha
        _bucket_argsort(x, order, counts)

    score = 0.0
    for i in range(n_p):
        score += w[i] * alpha[i]
    return score, loglik, -1


@njit(cache=True, fastmath=True)
def lgss_filter_score(y, u, a, q, r, b, sd0, n_p, rng):
    """Genealogy-score bootstrap filter for the linear-Gaussian model.

    Score components w.r.t. (a, q, r); same rng call order as sv_filter_score.
    """
    t_len = y.shape[0]
    inv_q = 1.0 / q
    inv_r = 1.0 / r
    sig = np.sqrt(q)
    c_obs = -0.5 * np.log(2.0 * np.pi * r)

    x = sd0 * rng.standard_normal(n_p)
    al_a = np.zeros(n_p)
    al_q = np.zeros(n_p)
    al_r = np.zeros(n_p)
    w = np.full(n_p, 1.0 / n_p)
    order = np.empty(n_p, np.int64)
    counts = np.empty(n_p + 1, np.int64)
    anc = np.empty(n_p, np.int64)
    x_new = np.empty(n_p)
    na = np.empty(n_p)
    nq = np.empty(n_p)
    nr = np.empty(n_p)
    logw = np.empty(n_p)
    ebits = np.empty(n_p, np.int64)
    poly = np.empty(n_p)
    loglik = 0.0
    _bucket_argsort(x, order, counts)

    for k in range(t_len):
        u0 = rng.uniform(0.0, 1.0)
        _systematic_by_order(w, order, u0, anc)
        noise = rng.standard_normal(n_p)
        uk = u[k]
        yk = y[k]
        mx = -np.inf
        for i in range(n_p):
            j = anc[i]
            xa = x[j]
            m = a * xa + b * uk
            xn = m + sig * noise[i]
            x_new[i] = xn
            resid = xn - m
            e = yk - xn
            na[i] = al_a[j] + resid * xa * inv_q
            nq[i] = al_q[j] - 0.5 * inv_q + 0.5 * resid * resid * inv_q * inv_q
            nr[i] = al_r[j] - 0.5 * inv_r + 0.5 * e * e * inv_r * inv_r
            lw = c_obs - 0.5 * e * e * inv_r
            logw[i] = lw
            if lw > mx:
                mx = lw
        if not np.isfinite(mx):
            return np.zeros(3), np.nan, k
        for i in range(n_p):
            logw[i] -= mx
        _exp_rows(logw, ebits, poly)
        s = 0.0
        for i in range(n_p):
            s += logw[i]
        loglik += mx + np.log(s / n_p)
        for i in range(n_p):
            w[i] = logw[i] / s
        x, x_new = x_new, x
        t0, t1, t2 = al_a, al_q, al_r
        al_a, al_q, al_r = na, nq, nr
        na, nq, nr = t0, t1, t2
        _bucket_argsort(x, order, counts)

    score = np.zeros(3)
    for i in range(n_p):
        score[0] += w[i] * al_a[i]
        score[1] += w[i] * al_q[i]
        score[2] += w[i] * al_r[i]
    return score, loglik, -1
