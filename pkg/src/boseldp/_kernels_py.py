"""Pure-Python/numpy implementations of the numerical kernels.

These mirror the compiled kernels in ``_kernels.pyx`` one to one and are
used whenever the extension is unavailable (or forced off with the
``BOSELDP_PURE_PYTHON`` environment variable).
"""

import math

import numpy as np

INV_E = 0.36787944117144233
# true 1/e minus its double representation
INV_E_LO = -1.2428753672788363e-17
E = math.e
MAX_ITER = 100


def _seed(x, branch):
    if x < -0.25:
        q = (x + INV_E) + INV_E_LO
        p = math.sqrt(max(2.0 * E * q, 0.0))
        if branch != 0:
            p = -p
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    if branch == 0:
        if x <= E:
            lx = math.log1p(x)
            return lx * (1.0 - math.log1p(lx) / (2.0 + lx))
        l1 = math.log(x)
        l2 = math.log(l1)
        return l1 - l2 + l2 / l1
    l1 = math.log(-x)
    l2 = math.log(-l1)
    return l1 - l2 + l2 / l1


def _bisect(x, branch):
    if branch == 0:
        lo = -1.0
        hi = 1.0 if x <= E else math.log(x) + 1.0
    else:
        hi = -1.0
        lo = -2.0
        while lo * math.exp(lo) <= x:
            lo *= 2.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f = mid * math.exp(mid) - x
        if (f > 0.0) == (branch == 0):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def lambert_w(x, branch):
    """Lambert W on branch 0 or -1; returns nan outside the domain."""
    if x != x:
        return math.nan
    if x < -INV_E - 1e-16:
        return math.nan
    if x <= -INV_E:
        return -1.0
    if branch == 0:
        if x == 0.0:
            return 0.0
        if x == math.inf:
            return math.inf
    else:
        if x >= 0.0:
            return math.nan
    w = _seed(x, branch)
    for _ in range(MAX_ITER):
        if abs(w) > 20.0:
            # Newton on w + log|w| - log|x|, stable for large |w|
            f = w + math.log(abs(w)) - math.log(abs(x))
            dw = f / (1.0 + 1.0 / w)
        else:
            ew = math.exp(w)
            f = w * ew - x
            wp1 = w + 1.0
            if f == 0.0 or wp1 == 0.0:
                return w
            denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
            if denom == 0.0:
                return w
            dw = f / denom
        w -= dw
        if abs(dw) <= 4e-16 * (1.0 + abs(w)):
            return w
    return _bisect(x, branch)


def lambert_w_array(x, branch):
    """Elementwise Lambert W over a float64 array."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    out = np.empty_like(flat)
    for i in range(flat.size):
        out[i] = lambert_w(float(flat[i]), branch)
    return out.reshape(x.shape)


def bose_series(n, alpha, rtol, max_terms):
    """Direct sum of k^-n e^(-alpha k) with a geometric tail bound.

    Returns ``(value, tail_bound, terms_used)``; requires ``alpha > 0``.
    """
    ea = math.exp(-alpha)
    neg = max(-n, 0.0)
    chunk = 4096
    total = 0.0
    k0 = 1
    while k0 <= max_terms:
        k = np.arange(k0, min(k0 + chunk, max_terms + 1), dtype=np.float64)
        terms = np.exp(-n * np.log(k) - alpha * k)
        nxt = np.exp(-n * np.log(k + 1.0) - alpha * (k + 1.0))
        r = ea * ((k + 2.0) / (k + 1.0)) ** neg
        with np.errstate(divide="ignore"):
            bound = np.where(r < 1.0, nxt / (1.0 - r), np.inf)
        partial = total + np.cumsum(terms)
        done = np.nonzero(bound <= rtol * partial)[0]
        if done.size:
            i = int(done[0])
            return float(total + math.fsum(terms[: i + 1])), float(bound[i]), int(k[i])
        total += math.fsum(terms)
        k0 += chunk
    return total, math.inf, max_terms


def power_exp_sum(s, lam, k_lo, k_hi):
    """Sum of k^-s e^(-lam k) for k_lo <= k <= k_hi."""
    if k_hi < k_lo:
        return 0.0
    k = np.arange(k_lo, k_hi + 1, dtype=np.float64)
    return math.fsum(np.exp(-s * np.log(k) - lam * k))


def mh_block(counts, log_rate, coord, up, logu, model, beta, mu, a, b,
             volume, sums, sumsq):
    """Run one block of single-coordinate Metropolis-Hastings steps.

    ``counts`` is updated in place and the per-coordinate running sums of
    the count and its square over the block are added to ``sums`` and
    ``sumsq``.  Returns the number of accepted moves.
    """
    kmax = counts.shape[0]
    state = [int(c) for c in counts]
    last = [0] * kmax
    acc_n = [0.0] * kmax
    acc_sq = [0.0] * kmax
    s0 = sum(state)
    s1 = sum((i + 1) * c for i, c in enumerate(state))
    s2 = sum((i + 1) * (i + 1) * c * c for i, c in enumerate(state))
    rates = [float(v) for v in log_rate]
    inv2v = 0.5 / volume
    accepted = 0
    nsteps = coord.shape[0]
    log2 = math.log(2.0)
    for t in range(nsteps):
        i = int(coord[t])
        k = i + 1
        n = state[i]
        if n == 0:
            step = 1
            logh = -log2
        elif up[t]:
            step = 1
            logh = 0.0
        else:
            step = -1
            logh = log2 if n == 1 else 0.0
        if step == 1:
            logr = rates[i] - math.log(n + 1)
        else:
            logr = math.log(n) - rates[i]
        dvh = 0.0
        if model == 1:
            dvh = a * (2 * step * s0 + 1) * inv2v
        elif model >= 2:
            dvh = -mu * (step * k) + a * (2 * step * k * s1 + k * k) * inv2v
            if model == 3:
                dvh -= b * (k * k * (2 * step * n + 1)) * inv2v
        logr = logr - beta * dvh + logh
        if logu[t] < logr:
            accepted += 1
            acc_n[i] += n * (t - last[i])
            acc_sq[i] += n * n * (t - last[i])
            last[i] = t
            state[i] = n + step
            s0 += step
            s1 += step * k
            s2 += k * k * (2 * step * n + 1)
    for i in range(kmax):
        n = state[i]
        acc_n[i] += n * (nsteps - last[i])
        acc_sq[i] += n * n * (nsteps - last[i])
        counts[i] = n
        sums[i] += acc_n[i]
        sumsq[i] += acc_sq[i]
    return accepted
