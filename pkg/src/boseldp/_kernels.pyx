# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels.

Same signatures and arithmetic as ``_kernels_py``; see that module for the
reference implementation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, log1p, sqrt, INFINITY, NAN

cnp.import_array()

cdef double INV_E = 0.36787944117144233
cdef double INV_E_LO = -1.2428753672788363e-17
cdef double E = 2.718281828459045
cdef int MAX_ITER = 100


cdef double _seed(double x, int branch) nogil:
    cdef double q, p, lx, l1, l2
    if x < -0.25:
        q = (x + INV_E) + INV_E_LO
        p = 2.0 * E * q
        if p < 0.0:
            p = 0.0
        p = sqrt(p)
        if branch != 0:
            p = -p
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    if branch == 0:
        if x <= E:
            lx = log1p(x)
            return lx * (1.0 - log1p(lx) / (2.0 + lx))
        l1 = log(x)
        l2 = log(l1)
        return l1 - l2 + l2 / l1
    l1 = log(-x)
    l2 = log(-l1)
    return l1 - l2 + l2 / l1


cdef double _bisect(double x, int branch) nogil:
    cdef double lo, hi, mid, f
    cdef int it
    if branch == 0:
        lo = -1.0
        hi = 1.0 if x <= E else log(x) + 1.0
    else:
        hi = -1.0
        lo = -2.0
        while lo * exp(lo) <= x:
            lo *= 2.0
    for it in range(2000):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f = mid * exp(mid) - x
        if (f > 0.0) == (branch == 0):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


cdef double _lambert_w(double x, int branch) nogil:
    cdef double w, f, dw, ew, wp1, denom
    cdef int it
    if x != x:
        return NAN
    if x < -INV_E - 1e-16:
        return NAN
    if x <= -INV_E:
        return -1.0
    if branch == 0:
        if x == 0.0:
            return 0.0
        if x == INFINITY:
            return INFINITY
    else:
        if x >= 0.0:
            return NAN
    w = _seed(x, branch)
    for it in range(MAX_ITER):
        if fabs(w) > 20.0:
            f = w + log(fabs(w)) - log(fabs(x))
            dw = f / (1.0 + 1.0 / w)
        else:
            ew = exp(w)
            f = w * ew - x
            wp1 = w + 1.0
            if f == 0.0 or wp1 == 0.0:
                return w
            denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
            if denom == 0.0:
                return w
            dw = f / denom
        w -= dw
        if fabs(dw) <= 4e-16 * (1.0 + fabs(w)):
            return w
    return _bisect(x, branch)


def lambert_w(double x, int branch):
    """Lambert W on branch 0 or -1; returns nan outside the domain."""
    return _lambert_w(x, branch)


def lambert_w_array(x, int branch):
    """Elementwise Lambert W over a float64 array."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(
        x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i, n = flat.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _lambert_w(flat[i], branch)
    return out.reshape(np.shape(x))


def bose_series(double n, double alpha, double rtol, long max_terms):
    """Direct sum of k^-n e^(-alpha k) with a geometric tail bound."""
    cdef double ea = exp(-alpha)
    cdef double neg = -n if n < 0.0 else 0.0
    cdef double total = 0.0, comp = 0.0, y, t
    cdef double term, nxt, r, bound = INFINITY
    cdef long k
    for k in range(1, max_terms + 1):
        term = exp(-n * log(<double>k) - alpha * k)
        # Kahan summation keeps long sums close to the fsum reference
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        nxt = exp(-n * log(<double>(k + 1)) - alpha * (k + 1))
        r = ea * ((k + 2.0) / (k + 1.0)) ** neg
        if r < 1.0:
            bound = nxt / (1.0 - r)
            if bound <= rtol * total:
                return total, bound, k
        else:
            bound = INFINITY
    return total, INFINITY, max_terms


def power_exp_sum(double s, double lam, long k_lo, long k_hi):
    """Sum of k^-s e^(-lam k) for k_lo <= k <= k_hi."""
    cdef double total = 0.0, comp = 0.0, y, t, term
    cdef long k
    for k in range(k_lo, k_hi + 1):
        term = exp(-s * log(<double>k) - lam * k)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def mh_block(cnp.int64_t[::1] counts, double[::1] log_rate,
             cnp.int64_t[::1] coord, cnp.uint8_t[::1] up, double[::1] logu,
             int model, double beta, double mu, double a, double b,
             double volume, double[::1] sums, double[::1] sumsq):
    """Run one block of single-coordinate Metropolis-Hastings steps."""
    cdef Py_ssize_t kmax = counts.shape[0]
    cdef Py_ssize_t nsteps = coord.shape[0]
    cdef Py_ssize_t t, i
    cdef cnp.int64_t k, n, step, s0 = 0, s1 = 0, s2 = 0
    cdef double logr, logh, dvh, inv2v = 0.5 / volume, log2 = log(2.0)
    cdef long accepted = 0
    cdef cnp.int64_t[::1] last = np.zeros(kmax, dtype=np.int64)
    cdef double[::1] acc_n = np.zeros(kmax)
    cdef double[::1] acc_sq = np.zeros(kmax)
    for i in range(kmax):
        n = counts[i]
        s0 += n
        s1 += (i + 1) * n
        s2 += (i + 1) * (i + 1) * n * n
    with nogil:
        for t in range(nsteps):
            i = coord[t]
            k = i + 1
            n = counts[i]
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
                logr = log_rate[i] - log(<double>(n + 1))
            else:
                logr = log(<double>n) - log_rate[i]
            dvh = 0.0
            if model == 1:
                dvh = a * <double>(2 * step * s0 + 1) * inv2v
            elif model >= 2:
                dvh = -mu * <double>(step * k) + a * <double>(2 * step * k * s1 + k * k) * inv2v
                if model == 3:
                    dvh -= b * <double>(k * k * (2 * step * n + 1)) * inv2v
            logr = logr - beta * dvh + logh
            if logu[t] < logr:
                accepted += 1
                acc_n[i] += <double>(n * (t - last[i]))
                acc_sq[i] += <double>(n * n * (t - last[i]))
                last[i] = t
                counts[i] = n + step
                s0 += step
                s1 += step * k
                s2 += k * k * (2 * step * n + 1)
        for i in range(kmax):
            n = counts[i]
            acc_n[i] += <double>(n * (nsteps - last[i]))
            acc_sq[i] += <double>(n * n * (nsteps - last[i]))
            sums[i] += acc_n[i]
            sumsq[i] += acc_sq[i]
    return accepted
