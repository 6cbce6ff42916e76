"""Special functions: Riemann zeta, Bose functions and Lambert W.

Infinite values are returned as IEEE ``inf``; inputs outside a function's
domain raise :class:`~boseldp.errors.DomainError`.
"""

from __future__ import annotations

import enum
import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DomainError

INV_E = kernels._kernels_py.INV_E
# Below this alpha the Bose function is evaluated from its expansion around 0.
BOSE_CROSSOVER = 0.5
SERIES_RTOL = 1e-14
SERIES_MAX_TERMS = 10_000_000
_EXPANSION_TERMS = 48

# B_2, B_4, ..., B_16
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


class WBranch(enum.IntEnum):
    """Real branches of the Lambert W function."""

    PRINCIPAL = 0
    LOWER = -1


class SeriesResult(NamedTuple):
    """A truncated series value with a bound on the omitted tail."""

    value: float
    error_bound: float
    terms: int


def _branch(branch) -> int:
    b = int(branch)
    if b not in (0, -1):
        raise DomainError(f"Lambert W branch must be 0 or -1, got {branch!r}")
    return b


def lambert_w(x: float, branch=WBranch.PRINCIPAL) -> float:
    """Real Lambert W: the solution ``w`` of ``w * exp(w) = x``.

    Parameters
    ----------
    x : float
        Argument; ``x >= -1/e`` on the principal branch and
        ``-1/e <= x < 0`` on the lower branch.
    branch : WBranch or int
        0 for the principal branch (``W >= -1``), -1 for the lower one.

    Returns
    -------
    float
        ``W(x)``; the lower branch returns ``-inf`` at ``x = 0``.

    Notes
    -----
    Halley iteration from asymptotic seeds (branch-point series near
    ``-1/e``, logarithmic expansions far from it), switching to Newton on
    ``w + log|w| = log|x|`` once ``|w| > 20``, with a bisection fallback.
    """
    b = _branch(branch)
    x = float(x)
    if math.isnan(x):
        raise DomainError("Lambert W of nan")
    if x < -INV_E - 1e-16:
        raise DomainError(f"Lambert W undefined for x={x!r} < -1/e")
    if b == -1:
        if x > 0.0:
            raise DomainError(f"lower Lambert W branch needs x < 0, got {x!r}")
        if x == 0.0:
            return -math.inf
    return kernels.lambert_w(x, b)


def lambert_w_array(x, branch=WBranch.PRINCIPAL) -> np.ndarray:
    """Vectorised :func:`lambert_w`; out-of-domain entries become nan."""
    b = _branch(branch)
    arr = np.asarray(x, dtype=np.float64)
    out = np.asarray(kernels.lambert_w_array(arr, b), dtype=np.float64)
    if b == -1:
        out = np.where(arr == 0.0, -np.inf, out)
    return out


def lambert_w_prime(x: float, branch=WBranch.PRINCIPAL) -> float:
    """Derivative ``W'(x) = W / (x (1 + W))``.

    The principal branch at ``x = 0`` returns the limit 1.  The derivative
    is singular at the branch point ``x = -1/e``.
    """
    b = _branch(branch)
    x = float(x)
    if b == 0 and x == 0.0:
        return 1.0
    w = lambert_w(x, b)
    if w == -1.0:
        raise DomainError("Lambert W derivative is singular at x = -1/e")
    return w / (x * (1.0 + w))


def _zeta_em(s: float, n_direct: int = 16) -> float:
    """Euler-Maclaurin evaluation, valid for any real ``s != 1`` above -13."""
    head = math.fsum(k ** -s for k in range(1, n_direct))
    N = float(n_direct)
    tail = N ** (1.0 - s) / (s - 1.0) + 0.5 * N ** -s
    rising = s
    power = N ** (-s - 1.0)
    fact = 2.0
    for j, b2j in enumerate(_BERNOULLI, start=1):
        tail += b2j / fact * rising * power
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        power /= N * N
        fact *= (2 * j + 1) * (2 * j + 2)
    return head + tail


def zeta(s: float) -> float:
    """Riemann zeta function for real ``s > 1``.

    Direct summation of the first terms plus an Euler-Maclaurin tail
    correction.
    """
    s = float(s)
    if not s > 1.0:
        raise DomainError(f"zeta requires s > 1, got {s!r}")
    if s == math.inf:
        return 1.0
    if s >= 30.0:
        total, k = 1.0, 2
        while True:
            term = k ** -s
            total += term
            if term < 1e-18 * total:
                return total
            k += 1
    return _zeta_em(s)


@lru_cache(maxsize=1024)
def zeta_continued(s: float) -> float:
    """Analytic continuation of zeta to real ``s != 1``.

    Uses Euler-Maclaurin for ``s >= -0.5`` and the reflection formula
    below that.  Negative even integers return an exact 0.
    """
    s = float(s)
    if s == 1.0:
        return math.inf
    if s > 1.0:
        return zeta(s)
    if s == 0.0:
        return -0.5
    if s < 0.0 and s == math.floor(s) and int(s) % 2 == 0:
        return 0.0
    if s >= -0.5:
        return _zeta_em(s)
    t = 1.0 - s
    return (2.0 ** s * math.pi ** (s - 1.0) * math.sin(0.5 * math.pi * s)
            * math.gamma(t) * zeta(t))


def _is_positive_integer(n: float) -> bool:
    return n >= 1.0 and n == math.floor(n)


@lru_cache(maxsize=256)
def _expansion_coeffs(n: float) -> tuple[float, ...]:
    """Coefficients c_k of the regular part sum_k c_k alpha^k."""
    skip = int(n) - 1 if _is_positive_integer(n) else -1
    out = []
    fact = 1.0
    for k in range(_EXPANSION_TERMS):
        if k > 0:
            fact *= k
        if k == skip:
            out.append(0.0)
            continue
        out.append(zeta_continued(n - k) * (-1.0) ** k / fact)
    return tuple(out)


def _singular_part(n: float, alpha):
    """Non-analytic leading term of g(n, alpha) as alpha -> 0."""
    if _is_positive_integer(n):
        m = int(n) - 1
        harmonic = math.fsum(1.0 / j for j in range(1, m + 1))
        return (-alpha) ** m / math.factorial(m) * (harmonic - np.log(alpha))
    return math.gamma(1.0 - n) * alpha ** (n - 1.0)


def bose_g_expansion(n: float, alpha: float) -> float:
    """Bose function from its expansion around ``alpha = 0``.

    Converges for ``0 < alpha < 2*pi``; accurate to rounding for
    ``alpha <= 0.5``.  Positive integer orders use the logarithmic form.
    """
    n, alpha = float(n), float(alpha)
    if not alpha > 0.0:
        raise DomainError("expansion needs alpha > 0")
    coeffs = _expansion_coeffs(n)
    regular = 0.0
    for c in reversed(coeffs):
        regular = regular * alpha + c
    return float(_singular_part(n, alpha)) + regular


def bose_g_series(n: float, alpha: float, rtol: float = SERIES_RTOL,
                  max_terms: int = SERIES_MAX_TERMS) -> SeriesResult:
    """Bose function by direct summation of ``k^-n exp(-alpha k)``.

    Stops once a geometric bound on the remaining tail falls below
    ``rtol`` times the partial sum, or after ``max_terms`` terms, in which
    case ``error_bound`` reports the (possibly infinite) tail bound.
    """
    n, alpha = float(n), float(alpha)
    if not alpha > 0.0:
        raise DomainError("direct series needs alpha > 0")
    value, err, terms = kernels.bose_series(n, alpha, rtol, int(max_terms))
    return SeriesResult(float(value), float(err), int(terms))


def bose_g(n: float, alpha: float) -> float:
    """Bose function ``g(n, alpha) = sum_k k^-n exp(-alpha k)``.

    Parameters
    ----------
    n : float
        Order (any real).
    alpha : float
        Non-negative fugacity exponent.

    Returns
    -------
    float
        The value, ``zeta(n)`` at ``alpha = 0`` when ``n > 1`` and ``inf``
        at ``alpha = 0`` when ``n <= 1``.
    """
    n, alpha = float(n), float(alpha)
    if math.isnan(alpha) or math.isnan(n):
        raise DomainError("Bose function of nan")
    if alpha < 0.0:
        raise DomainError(f"Bose function needs alpha >= 0, got {alpha!r}")
    if alpha == 0.0:
        return zeta(n) if n > 1.0 else math.inf
    if alpha == math.inf:
        return 0.0
    if alpha < BOSE_CROSSOVER:
        return bose_g_expansion(n, alpha)
    return bose_g_series(n, alpha).value


def _series_matrix(n: float, alpha: np.ndarray, k_lo: int, nterms: int) -> np.ndarray:
    """Row sums of k^-n exp(-alpha k) for k_lo <= k < k_lo + nterms."""
    out = np.zeros(alpha.shape[0])
    step = max(1, 2_000_000 // max(alpha.shape[0], 1))
    for c in range(k_lo, k_lo + nterms, step):
        k = np.arange(c, min(c + step, k_lo + nterms), dtype=np.float64)
        out += np.exp(-n * np.log(k)[None, :] - alpha[:, None] * k[None, :]).sum(axis=1)
    return out


def _decaying_sums(n: float, alpha: np.ndarray, k_lo: int) -> np.ndarray:
    """Sums from ``k_lo`` to infinity for rates with ``alpha * k_lo`` not small.

    Rows are binned by ``alpha`` so each bin only sums the terms that
    matter at double precision.
    """
    out = np.zeros(alpha.shape[0])
    bins = np.floor(np.log2(alpha)).astype(int)
    for bval in np.unique(bins):
        sel = bins == bval
        amin = alpha[sel].min()
        # terms beyond k_lo decay at least like exp(-amin (k - k_lo))
        # times a polynomial factor when n < 0
        span = 40.0 / amin
        if n < 0:
            for _ in range(6):
                span = (40.0 - n * math.log1p(span / k_lo)) / amin
        nterms = int(math.ceil(span)) + 2
        out[sel] = _series_matrix(n, alpha[sel], k_lo, nterms)
    return out


def bose_g_array(n: float, alpha) -> np.ndarray:
    """Vectorised :func:`bose_g` over an array of ``alpha`` values."""
    n = float(n)
    a = np.atleast_1d(np.asarray(alpha, dtype=np.float64)).ravel()
    if np.any(a < 0.0) or np.any(np.isnan(a)):
        raise DomainError("Bose function needs alpha >= 0")
    out = np.empty_like(a)
    zero = a == 0.0
    out[zero] = zeta(n) if n > 1.0 else math.inf
    out[np.isinf(a)] = 0.0
    small = (a > 0.0) & (a < BOSE_CROSSOVER)
    if small.any():
        x = a[small]
        regular = np.zeros_like(x)
        for c in reversed(_expansion_coeffs(n)):
            regular = regular * x + c
        out[small] = _singular_part(n, x) + regular
    big = (a >= BOSE_CROSSOVER) & np.isfinite(a)
    if big.any():
        out[big] = _decaying_sums(n, a[big], 1)
    return out.reshape(np.shape(alpha))


def bose_tail(n: float, alpha: float, start: int) -> float:
    """Tail ``sum_{k > start} k^-n exp(-alpha k)`` of the Bose series."""
    return float(bose_tail_array(n, np.array([alpha]), start)[0])


def bose_tail_array(n: float, alpha, start: int) -> np.ndarray:
    """Vectorised :func:`bose_tail` over ``alpha``."""
    n = float(n)
    start = int(start)
    a = np.atleast_1d(np.asarray(alpha, dtype=np.float64)).ravel()
    if start <= 0:
        return bose_g_array(n, a).reshape(np.shape(alpha))
    out = np.zeros_like(a)
    gone = a * (start + 1) > 745.0
    direct = (a * (start + 1) >= 8.0) & ~gone
    diff = ~direct & ~gone
    if direct.any():
        out[direct] = _decaying_sums(n, a[direct], start + 1)
    if diff.any():
        x = a[diff]
        full = bose_g_array(n, x)
        head = _series_matrix(n, x, 1, start)
        out[diff] = np.where(np.isinf(full), np.inf, full - head)
    return out.reshape(np.shape(alpha))
