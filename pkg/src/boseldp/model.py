"""Cycle-count models: parameters, weights, sequences, rates and energies.

A state is a non-negative sequence ``x = (x_1, x_2, ...)`` of cycle-count
densities.  Sequences are stored as an explicit prefix plus an analytic
tail so that the infinite sums entering rates and energies are exact up
to rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import specfun
from .errors import DomainError

# |u_k| below which the Lambert tail switches to its power series
LAMBERT_SERIES_THRESHOLD = 0.05
LAMBERT_SERIES_ORDER = 24
LAMBERT_SERIES_MAX_ORDER = 4000
MAX_EXPLICIT_TERMS = 2_000_000
# explicit entries smaller than this are dropped in favour of the tail
UNDERFLOW_CUT = 1e-280


class Model(str, enum.Enum):
    """The four interaction models."""

    IDEAL = "ideal"
    CMF = "cmf"
    PMF = "pmf"
    HYL = "hyl"


@dataclass(frozen=True)
class ModelParams:
    """Validated model parameters.

    Parameters
    ----------
    model : Model
        Which Hamiltonian.
    d : int
        Spatial dimension, at least 1.
    beta : float
        Inverse temperature, positive.
    mu : float
        Chemical potential entering the Hamiltonian.
    alpha : float
        Non-positive reference chemical potential.  Only ``mu + alpha``
        matters; see :meth:`reduced`.
    a, b : float
        Interaction strengths (``a`` for CMF/PMF/HYL, ``b`` for HYL).
    """

    model: Model
    d: int
    beta: float
    mu: float = 0.0
    alpha: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        for name in ("beta", "mu", "alpha", "a", "b"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.beta <= 0.0:
            raise DomainError(f"beta must be positive, got {self.beta!r}")
        if self.alpha > 0.0:
            raise DomainError(f"alpha must be <= 0, got {self.alpha!r}")
        if self.a < 0.0 or self.b < 0.0:
            raise DomainError("interaction strengths must be non-negative")
        m = self.model
        if m in (Model.IDEAL, Model.CMF) and self.mu_eff > 0.0:
            raise DomainError(f"{m.value} model needs mu + alpha <= 0")
        if m is Model.PMF and self.a <= 0.0:
            raise DomainError("PMF model needs a > 0")
        if m is Model.HYL and not self.a > self.b:
            raise DomainError("HYL model needs a > b >= 0")

    @property
    def mu_eff(self) -> float:
        """Effective chemical potential ``mu + alpha``."""
        return self.mu + self.alpha

    def reduced(self) -> "ModelParams":
        """Equivalent parameters with ``alpha`` folded into ``mu``."""
        return replace(self, mu=self.mu_eff, alpha=0.0)

    @property
    def weights(self) -> "Weights":
        return Weights(self.d, self.beta)

    def as_dict(self) -> dict:
        return {"model": self.model.value, "d": self.d, "beta": self.beta,
                "mu": self.mu, "alpha": self.alpha, "a": self.a, "b": self.b,
                "mu_eff": self.mu_eff}


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if eta > 0.0:
        raise DomainError(f"weight exponent must be <= 0, got {eta!r}")
    return eta


@dataclass(frozen=True)
class Weights:
    """Ideal-gas cycle weights ``q_k^(eta)`` in dimension ``d``."""

    d: int
    beta: float

    @property
    def thermal(self) -> float:
        """``(4 pi beta)^(d/2)``."""
        return (4.0 * math.pi * self.beta) ** (0.5 * self.d)

    def log_q(self, k, eta: float = 0.0):
        k = np.asarray(k, dtype=np.float64)
        return (self.beta * eta * k - math.log(self.thermal)
                - (1.0 + 0.5 * self.d) * np.log(k))

    def q(self, k, eta: float = 0.0):
        """Weight ``exp(beta eta k) / ((4 pi beta)^(d/2) k^(1+d/2))``."""
        return np.exp(self.log_q(k, _check_eta(eta)))

    def qbar(self, eta: float = 0.0) -> float:
        """Total weight ``sum_k q_k^(eta)``."""
        eta = _check_eta(eta)
        return specfun.bose_g(1.0 + 0.5 * self.d, -self.beta * eta) / self.thermal

    def rho(self, eta: float = 0.0) -> float:
        """Particle density ``sum_k k q_k^(eta)`` (``inf`` allowed)."""
        eta = _check_eta(eta)
        return specfun.bose_g(0.5 * self.d, -self.beta * eta) / self.thermal

    @property
    def rho_c(self) -> float:
        """Critical density; infinite for ``d <= 2``."""
        return self.rho(0.0)


def cycle_weight(params: ModelParams, k, eta: float | None = None):
    """``q_k^(eta)`` for the dimension and temperature of ``params``.

    ``eta`` defaults to ``params.mu_eff``.
    """
    eta = params.mu_eff if eta is None else eta
    return params.weights.q(k, eta)


def qbar(params: ModelParams, eta: float | None = None) -> float:
    """Total weight ``sum_k q_k^(eta)``; ``eta`` defaults to ``mu_eff``."""
    eta = params.mu_eff if eta is None else eta
    return params.weights.qbar(eta)


class TailSums(NamedTuple):
    """Sums over a tail ``k > start``.

    ``xlogx`` is ``sum x_k log(x_k / q_k^(eta))`` relative to the tail's
    own exponent, ``square`` is ``sum k^2 x_k^2``.
    """

    mass: float
    density: float
    xlogx: float
    square: float


class ZeroTail:
    """All entries beyond the explicit prefix vanish."""

    eta = None

    def values(self, ks) -> np.ndarray:
        return np.zeros(np.shape(ks))

    def sums(self, start: int) -> TailSums:
        return TailSums(0.0, 0.0, 0.0, 0.0)

    def __repr__(self):
        return "ZeroTail()"


ZERO_TAIL = ZeroTail()


@dataclass(frozen=True)
class IdealTail:
    """Tail ``x_k = scale * q_k^(eta)``."""

    weights: Weights
    eta: float
    scale: float = 1.0

    def values(self, ks) -> np.ndarray:
        return self.scale * self.weights.q(ks, self.eta)

    def sums(self, start: int) -> TailSums:
        w = self.weights
        lam = -w.beta * self.eta
        th = w.thermal
        mass = self.scale * specfun.bose_tail(1.0 + 0.5 * w.d, lam, start) / th
        dens = self.scale * specfun.bose_tail(0.5 * w.d, lam, start) / th
        xlogx = math.log(self.scale) * mass if self.scale > 0 else 0.0
        sq = self.scale ** 2 * specfun.bose_tail(float(w.d), 2.0 * lam, start) / th ** 2
        return TailSums(mass, dens, xlogx, sq)


def lambert_u_log(weights: Weights, bbeta: float, ks, eta: float):
    """``log|u_k|`` with ``u_k = -b beta k^2 q_k^(eta)``."""
    ks = np.asarray(ks, dtype=np.float64)
    return math.log(bbeta) + 2.0 * np.log(ks) + weights.log_q(ks, eta)


def lambert_values(weights: Weights, bbeta: float, eta: float, ks, chi=None):
    """Entries ``-W_chi(u_k) / (b beta k^2)`` of a Lambert sequence.

    ``chi`` maps a 1-based index to the branch (0 or -1); unlisted indices
    use the principal branch.  Entries whose ``u_k`` falls below ``-1/e``
    come back as nan.
    """
    ks = np.asarray(ks, dtype=np.float64)
    u = -np.exp(lambert_u_log(weights, bbeta, ks, eta))
    u = np.where((u < -specfun.INV_E) & (u > -specfun.INV_E * (1 + 1e-13)),
                 -specfun.INV_E, u)
    w = specfun.lambert_w_array(u, 0)
    if chi:
        for j, br in chi.items():
            if br == -1:
                idx = np.nonzero(ks == j)[0]
                if idx.size:
                    w[idx] = specfun.lambert_w_array(u[idx], -1)
    return -w / (bbeta * ks * ks)


def _series_start(weights: Weights, bbeta: float, eta: float, start: int) -> float:
    """First index beyond which the ``W_0`` power series is used.

    Normally the index where ``|u_k|`` drops below the threshold for good.
    In ``d = 2`` with ``c < 1/e`` every ``|u_k|`` stays below ``c``, so the
    series may start anywhere; it starts at ``start`` when the threshold
    would need too many explicit terms (or is never reached, ``eta = 0``).
    """
    d = weights.d
    k0 = _threshold_index(weights, bbeta, eta, start)
    if d == 2 and bbeta / weights.thermal < specfun.INV_E and k0 - start > 4096:
        return float(max(start, 1))
    return k0


def _threshold_index(weights: Weights, bbeta: float, eta: float, start: int) -> float:
    d, beta = weights.d, weights.beta
    logc = math.log(bbeta / weights.thermal)
    target = math.log(LAMBERT_SERIES_THRESHOLD)
    slope = 1.0 - 0.5 * d

    def f(k):
        return logc + slope * math.log(k) + beta * eta * k - target

    lo = float(max(start, 1))
    if d == 1:
        if eta == 0.0:
            return math.inf
        lo = max(lo, 1.0 / (2.0 * beta * -eta))
    elif eta == 0.0 and d == 2:
        return lo if f(1.0) <= 0.0 else math.inf
    if f(lo) <= 0.0:
        return float(max(start, math.floor(lo)))
    hi = lo * 2.0
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > 1e18:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 0.5:
            break
    return float(math.ceil(hi))


def _w_power_coeff(r: int, m: int) -> float:
    """Taylor coefficient of ``u^m`` in ``W_0(u)^r``."""
    if m < r:
        return 0.0
    return r / m * (-m) ** (m - r) / math.factorial(m - r)


def _w_power_term_log(r: int, m: int, c: float) -> float:
    """``log`` of ``|coef_m c^m|``; the signed term is ``(-1)^r`` times it."""
    return math.log(r / m) + (m - r) * math.log(m) - math.lgamma(m - r + 1) + m * math.log(c)


def _series_order(log_umax: float) -> int:
    """Order making the omitted part of the ``W_0`` series negligible."""
    if log_umax <= math.log(LAMBERT_SERIES_THRESHOLD):
        return LAMBERT_SERIES_ORDER
    ratio = log_umax + 1.0
    if ratio >= 0.0:
        return LAMBERT_SERIES_MAX_ORDER
    # terms decay like (|u| e)^m; 40 nats is below double precision
    return int(min(LAMBERT_SERIES_MAX_ORDER, max(LAMBERT_SERIES_ORDER, math.ceil(-40.0 / ratio))))


def lambert_power_sums(weights: Weights, bbeta: float, eta, start: int,
                       terms=((1, -1),), series_start: float | None = None) -> np.ndarray:
    """Sums ``sum_{k > start} k^p W_0(u_k)^r`` for each ``(r, p)`` in ``terms``.

    Vectorised over an array of exponents ``eta``; returns an array of
    shape ``(len(terms),) + eta.shape``.  Entries with some ``u_k < -1/e``
    are nan.  ``series_start`` fixes the index where the power series
    takes over; by default it is chosen from the largest ``eta``.
    """
    eta_arr = np.atleast_1d(np.asarray(eta, dtype=np.float64)).ravel()
    d, beta = weights.d, weights.beta
    c = bbeta / weights.thermal
    out = np.zeros((len(terms), eta_arr.size))
    if d == 2:
        flat = eta_arr == 0.0
    else:
        flat = np.zeros(eta_arr.size, dtype=bool)
    if d == 1:
        out[:, eta_arr == 0.0] = np.nan
    rest = ~flat & ~((d == 1) & (eta_arr == 0.0))
    if flat.any():
        w0 = specfun.lambert_w(-c, 0) if c <= specfun.INV_E else math.nan
        for i, (r, p) in enumerate(terms):
            out[i, flat] = w0 ** r * specfun.bose_tail(-p, 0.0, start)
    if not rest.any():
        return out.reshape((len(terms),) + np.shape(eta))
    er = eta_arr[rest]
    if series_start is None:
        k0 = _series_start(weights, bbeta, float(er.max()), start)
    else:
        k0 = max(float(series_start), float(start))
    if not math.isfinite(k0) or k0 - start > MAX_EXPLICIT_TERMS:
        out[:, rest] = np.nan
        return out.reshape((len(terms),) + np.shape(eta))
    k0 = int(k0)
    acc = np.zeros((len(terms), er.size))
    if k0 > start:
        step = max(1, 1_000_000 // er.size)
        for lo in range(start + 1, k0 + 1, step):
            ks = np.arange(lo, min(lo + step, k0 + 1), dtype=np.float64)
            logu = (math.log(bbeta) + 2.0 * np.log(ks)[None, :]
                    + beta * er[:, None] * ks[None, :]
                    - math.log(weights.thermal) - (1.0 + 0.5 * d) * np.log(ks)[None, :])
            u = -np.exp(logu)
            bad = u < -specfun.INV_E * (1 + 1e-13)
            u = np.maximum(u, -specfun.INV_E)
            w = specfun.lambert_w_array(u, 0)
            w[bad] = np.nan
            for i, (r, p) in enumerate(terms):
                acc[i] += (ks[None, :] ** p * w ** r).sum(axis=1)
    slope = 1.0 - 0.5 * d
    # |u_k| is nonincreasing beyond k0 for d >= 2 and eta <= 0
    log_umax = math.log(c) + slope * math.log(k0 + 1.0) + beta * float(er.max()) * (k0 + 1.0)
    order = _series_order(log_umax)
    for i, (r, p) in enumerate(terms):
        total = np.zeros(er.size)
        sign = -1.0 if r % 2 else 1.0
        for m in range(r, order + 1):
            s = -p - m * slope
            tail = specfun.bose_tail_array(s, -m * beta * er, k0)
            term = sign * math.exp(_w_power_term_log(r, m, c)) * tail
            total += term
            if m >= LAMBERT_SERIES_ORDER and np.all(np.abs(term) <= 1e-18 * np.abs(total)):
                break
        acc[i] += total
    out[:, rest] = acc
    return out.reshape((len(terms),) + np.shape(eta))


@dataclass(frozen=True)
class LambertTail:
    """Tail ``x_k = -W_0(-b beta k^2 q_k^(eta)) / (b beta k^2)``.

    Stationary sequences of the HYL model have this form beyond their
    explicit prefix.
    """

    weights: Weights
    eta: float
    bbeta: float

    def values(self, ks) -> np.ndarray:
        return lambert_values(self.weights, self.bbeta, self.eta, ks)

    def sums(self, start: int) -> TailSums:
        s12, s11, s22 = lambert_power_sums(
            self.weights, self.bbeta, np.array([self.eta]), start,
            terms=((1, -2), (1, -1), (2, -2)))[:, 0]
        bb = self.bbeta
        return TailSums(-s12 / bb, -s11 / bb, s22 / bb, s22 / bb ** 2)


@dataclass(frozen=True, eq=False)
class CycleCounts:
    """A cycle-count sequence: explicit prefix ``x_1..x_K`` plus a tail.

    Parameters
    ----------
    values : array_like
        Explicit entries for ``k = 1..K``.
    tail : ZeroTail, IdealTail or LambertTail
        Analytic description of the entries for ``k > K``.
    """

    values: np.ndarray
    tail: object = field(default=ZERO_TAIL)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).ravel()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def k_max(self) -> int:
        return int(self.values.shape[0])

    def _ks(self) -> np.ndarray:
        return np.arange(1, self.k_max + 1, dtype=np.float64)

    def _tail_sums(self) -> TailSums:
        return self.tail.sums(self.k_max)

    def full(self, k_max: int) -> np.ndarray:
        """Entries ``x_1..x_{k_max}``, evaluating the tail where needed."""
        if k_max <= self.k_max:
            return np.array(self.values[:k_max])
        ks = np.arange(self.k_max + 1, k_max + 1, dtype=np.float64)
        return np.concatenate([self.values, self.tail.values(ks)])

    def mass(self) -> float:
        """``sum_k x_k``."""
        return math.fsum(self.values) + self._tail_sums().mass

    def density(self) -> float:
        """Particle density ``D(x) = sum_k k x_k``."""
        return math.fsum(self._ks() * self.values) + self._tail_sums().density

    def square_sum(self) -> float:
        """``sum_k k^2 x_k^2``."""
        ks = self._ks()
        return math.fsum((ks * self.values) ** 2) + self._tail_sums().square

    def trimmed(self) -> "CycleCounts":
        """Drop trailing explicit entries that underflow; the tail covers them."""
        v = self.values
        keep = np.nonzero(np.abs(v) >= UNDERFLOW_CUT)[0]
        n = int(keep[-1]) + 1 if keep.size else min(1, v.size)
        if n == v.size or isinstance(self.tail, ZeroTail):
            return self
        return CycleCounts(v[:n], self.tail)


def density(x: CycleCounts) -> float:
    """Particle density ``D(x)``."""
    return x.density()


def _entropy_rate(weights: Weights, x: CycleCounts, ref_eta: float) -> float:
    """``sum_k x_k (log(x_k / q_k^(ref)) - 1) + qbar^(ref)``."""
    v = x.values
    if np.any(v < 0.0) or np.any(np.isnan(v)):
        return math.inf
    ks = x._ks()
    pos = v > 0.0
    explicit = math.fsum(v[pos] * (np.log(v[pos]) - weights.log_q(ks[pos], ref_eta) - 1.0))
    total = explicit + weights.qbar(ref_eta)
    tail = x.tail
    if isinstance(tail, ZeroTail):
        return total
    if tail.weights != weights:
        raise DomainError("tail weights do not match the model weights")
    ts = x._tail_sums()
    t = ts.xlogx - ts.mass
    if tail.eta != ref_eta:
        t += weights.beta * (tail.eta - ref_eta) * ts.density
    return total + t


def rate_ideal(params: ModelParams, x: CycleCounts) -> float:
    """Ideal-gas rate ``I_mu(x)`` at ``mu = params.mu_eff``.

    ``0 log 0 = 0``; any negative entry gives ``inf``.
    """
    mu = params.mu_eff
    if mu > 0.0:
        raise DomainError("ideal rate needs mu + alpha <= 0")
    return _entropy_rate(params.weights, x, mu)


def _ref_eta(params: ModelParams) -> float:
    return params.mu_eff if params.model in (Model.IDEAL, Model.CMF) else 0.0


def hamiltonian(params: ModelParams, x: CycleCounts) -> float:
    """The model's mean-field energy ``H(x)`` (with ``mu`` replaced by ``mu_eff``)."""
    m = params.model
    if m is Model.IDEAL:
        return 0.0
    if m is Model.CMF:
        return 0.5 * params.a * x.mass() ** 2
    dens = x.density()
    if math.isinf(dens):
        return math.inf
    mu, a = params.mu_eff, params.a
    h = -mu * dens + 0.5 * a * dens * dens
    if m is Model.HYL:
        h -= 0.5 * params.b * x.square_sum()
    return h


def hamiltonian_lsc(params: ModelParams, x: CycleCounts) -> float:
    """Lower-semicontinuous regularisation of :func:`hamiltonian`.

    Equal to ``H`` for Ideal and CMF.  For PMF it is ``-mu^2/(2a)`` when
    ``D(x) < mu/a``; for HYL the quadratic density part is flattened the
    same way with ``a - b`` in place of ``a``.
    """
    m = params.model
    if m in (Model.IDEAL, Model.CMF):
        return hamiltonian(params, x)
    dens = x.density()
    if math.isinf(dens):
        return math.inf
    mu, a, b = params.mu_eff, params.a, params.b
    if m is Model.PMF:
        if a * dens < mu:
            return -mu * mu / (2.0 * a)
        return -mu * dens + 0.5 * a * dens * dens
    sq = x.square_sum()
    if a * dens < mu:
        return (-0.5 * b * sq - b / (a - b) * (-mu * dens + 0.5 * a * dens * dens)
                - mu * mu / (2.0 * (a - b)))
    return -mu * dens + 0.5 * a * dens * dens - 0.5 * b * sq


def objective(params: ModelParams, x: CycleCounts) -> float:
    """Unnormalised rate ``I(x) + beta H_lsc(x)``.

    The entropy part is taken relative to ``q^(mu)`` for Ideal and CMF and
    relative to ``q^(0)`` for PMF and HYL.
    """
    ent = _entropy_rate(params.weights, x, _ref_eta(params))
    if math.isinf(ent):
        return ent
    return ent + params.beta * hamiltonian_lsc(params, x)


def rate_model(params: ModelParams, x: CycleCounts, normalizer: float | None = None) -> float:
    """Rate function of the model: :func:`objective` minus its infimum.

    If ``normalizer`` is not given it is computed from the model's zero.
    """
    if normalizer is None:
        from .minimize import zero
        normalizer = zero(params).objective
    return objective(params, x) - normalizer


def rate_gradient(params: ModelParams, x: CycleCounts) -> np.ndarray:
    """Partial derivatives of :func:`objective` in each explicit coordinate."""
    w = params.weights
    v = x.values
    ks = x._ks()
    beta = params.beta
    with np.errstate(divide="ignore"):
        grad = np.log(v) - w.log_q(ks, _ref_eta(params))
    m = params.model
    if m is Model.CMF:
        grad = grad + params.a * beta * x.mass()
    elif m in (Model.PMF, Model.HYL):
        mu, a = params.mu_eff, params.a
        dens = x.density()
        if m is Model.PMF:
            grad = grad + beta * ks * max(a * dens - mu, 0.0)
        else:
            factor = 1.0 if a * dens >= mu else -params.b / (a - params.b)
            grad = grad - params.b * beta * ks * ks * v - beta * ks * (mu - a * dens) * factor
    return grad


def cumulant_seq(params: ModelParams, t) -> float:
    """``sum_k q_k^(mu)(exp(t_k) - 1)`` for a finitely supported ``t``."""
    t = np.asarray(t, dtype=np.float64).ravel()
    ks = np.arange(1, t.size + 1, dtype=np.float64)
    q = params.weights.q(ks, params.mu_eff)
    with np.errstate(over="ignore"):
        terms = q * np.expm1(t)
    return math.fsum(terms)


def cumulant_density(params: ModelParams, t: float) -> float:
    """``sum_k q_k^(alpha)(exp(t k) - 1)`` as a function of scalar ``t``.

    Infinite when ``t > -alpha beta``; finite on the boundary for every
    dimension.
    """
    w = params.weights
    alpha = params.alpha
    shifted = alpha + float(t) / params.beta
    if shifted > 0.0:
        return math.inf
    return w.qbar(shifted) - w.qbar(alpha)
