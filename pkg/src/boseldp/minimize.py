"""Zeros (global minimisers) of the model rate functions.

Ideal, CMF and PMF zeros are explicit up to a scalar equation.  HYL zeros
are found by scanning the reduced fixed-point equation ``delta = g^chi(delta)``
over every branch choice ``chi`` of the Lambert W function and keeping
the candidate with the smallest objective.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import model as mdl
from . import specfun
from .errors import DomainError, NonConvergenceError
from .model import CycleCounts, IdealTail, LambertTail, Model, ModelParams, ZERO_TAIL

DEFAULT_K_MAX = 4096


@dataclass
class MinimizerSolution:
    """A stationary point of a model rate function.

    Attributes
    ----------
    xi : CycleCounts
        The minimising sequence.
    objective : float
        ``I(xi) + beta H_lsc(xi)``; the rate's normaliser.
    delta_star : float or None
        Solution of the scalar density equation (PMF, HYL).
    chi : tuple of int
        1-based indices taken on the lower Lambert branch (HYL only).
    unique : bool
        False when another candidate attains the same objective.
    info : dict
        Solver diagnostics (fixed-point residual, regime, ...).
    """

    xi: CycleCounts
    objective: float
    delta_star: float | None = None
    chi: tuple = ()
    unique: bool = True
    info: dict = field(default_factory=dict)

    @property
    def density(self) -> float:
        return self.xi.density()

    def chi_vector(self, length: int) -> tuple:
        """Branch choices ``(chi_1, ..., chi_length)`` as 0 / -1 entries."""
        return tuple(-1 if k in self.chi else 0 for k in range(1, length + 1))


def _ideal_like(params: ModelParams, eta: float, scale: float, k_max: int) -> CycleCounts:
    w = params.weights
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    vals = scale * w.q(ks, eta)
    return CycleCounts(vals, IdealTail(w, eta, scale)).trimmed()


def zero_ideal(params: ModelParams, k_max: int = DEFAULT_K_MAX) -> MinimizerSolution:
    """Zero of the ideal rate: ``xi = q^(mu)``."""
    mu = params.mu_eff
    if mu > 0.0:
        raise DomainError("ideal zero needs mu + alpha <= 0")
    xi = _ideal_like(params, mu, 1.0, k_max)
    obj = mdl._entropy_rate(params.weights, xi, mu)
    return MinimizerSolution(xi, obj, info={"fixed_point_residual": 0.0})


def zero_cmf(params: ModelParams, k_max: int = DEFAULT_K_MAX) -> MinimizerSolution:
    """Zero of the CMF rate: ``xi = (W0(K)/K) q^(mu)`` with ``K = a beta qbar^(mu)``."""
    mu = params.mu_eff
    if mu > 0.0:
        raise DomainError("CMF zero needs mu + alpha <= 0")
    a, beta = params.a, params.beta
    qb = params.weights.qbar(mu)
    K = a * beta * qb
    W = specfun.lambert_w(K, 0)
    factor = W / K if K > 0.0 else 1.0
    gamma = W / (a * beta) if a > 0.0 else qb
    xi = _ideal_like(params, mu, factor, k_max)
    cmf = replace(params, model=Model.CMF)
    resid = gamma - qb * math.exp(-a * beta * gamma)
    return MinimizerSolution(xi, mdl.objective(cmf, xi),
                             info={"K": K, "W": W, "factor": factor, "Gamma": gamma,
                                   "fixed_point_residual": resid})


def _bisect_increasing(f, lo: float, hi: float, max_iter: int = 400) -> float:
    """Root of an increasing function bracketed by ``f(lo) <= 0 < f(hi)``."""
    flo = f(lo)
    fhi = f(hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm > 0.0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return lo if abs(flo) <= abs(fhi) else hi


def pmf_density_map(params: ModelParams, delta: float, k_max: int | None = None) -> float:
    """``h(delta) = sum_k k q_k^(0) exp(beta k (mu - a delta)_-)``.

    With ``k_max`` the sum is truncated to ``k <= k_max``.
    """
    eta = min(params.mu_eff - params.a * delta, 0.0)
    if k_max is None:
        return params.weights.rho(eta)
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    return math.fsum(ks * params.weights.q(ks, eta))


def zero_pmf(params: ModelParams, k_max: int = DEFAULT_K_MAX,
             truncated: bool = False) -> MinimizerSolution:
    """Zero of the PMF rate.

    ``delta*`` solves ``delta = h(delta)`` (see :func:`pmf_density_map`) and
    ``xi_k = q_k^(0) exp(beta k (mu - a delta*)_-)``.  When ``mu >= a rho_c``
    (only possible for ``d >= 3``) the solution sits on the plateau
    ``delta* = rho_c``, ``xi = q^(0)``.

    Parameters
    ----------
    truncated : bool
        Solve the problem restricted to cycle lengths ``k <= k_max``
        (used to compare with finite simulations).  No condensate can form
        there, so ``xi_k = q_k^(0) exp(beta k (mu - a delta*))`` with no
        clipping of the exponent; the objective is the finite-dimensional
        one.
    """
    mu, a = params.mu_eff, params.a
    if a <= 0.0:
        raise DomainError("PMF zero needs a > 0")
    if truncated:
        return _zero_pmf_truncated(params, k_max)

    rho = params.weights.rho
    rho_c = params.weights.rho_c
    plateau = math.isfinite(rho_c) and mu >= a * rho_c
    if plateau:
        delta, eta, resid = rho_c, 0.0, 0.0
    else:
        # unknown t = a delta - mu = -eta >= 0; near t = 0 (d <= 2, mu > 0)
        # delta cannot resolve the root but t can
        def F(t):
            return (mu + t) / a - rho(-t)

        lo = max(-mu, 0.0)
        hi = max(2.0 * lo, 1.0)
        while F(hi) <= 0.0:
            hi *= 2.0
            if hi > 1e300:
                raise NonConvergenceError("PMF density equation has no bracket")
        t = _bisect_increasing(F, lo, hi)
        delta, eta, resid = (mu + t) / a, -t, F(t)
    xi = _ideal_like(params, eta, 1.0, k_max)
    pmf = replace(params, model=Model.PMF)
    info = {"plateau": plateau, "eta": eta, "rho_c": rho_c,
            "fixed_point_residual": resid}
    return MinimizerSolution(xi, mdl.objective(pmf, xi), delta_star=delta, info=info)


def _zero_pmf_truncated(params: ModelParams, k_max: int) -> MinimizerSolution:
    mu, a, beta = params.mu_eff, params.a, params.beta
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    q0 = params.weights.q(ks, 0.0)

    def xi_of(delta):
        return q0 * np.exp(beta * ks * (mu - a * delta))

    def h(delta):
        return math.fsum(ks * xi_of(delta))

    # x - h(x) is increasing; h(x) <= h(0) for x >= 0 bounds the root
    hi = max(h(0.0), 1e-300)
    delta = _bisect_increasing(lambda x: x - h(x), 0.0, hi)
    x = xi_of(delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(x > 0.0, x * np.log(x / q0), 0.0) - x + q0
    dens = math.fsum(ks * x)
    obj = math.fsum(ent) + beta * (-mu * dens + 0.5 * a * dens * dens)
    info = {"plateau": False, "eta": mu - a * delta, "rho_c": math.inf,
            "fixed_point_residual": delta - h(delta), "k_max": k_max}
    return MinimizerSolution(CycleCounts(x, ZERO_TAIL), obj, delta_star=delta, info=info)


@dataclass(frozen=True)
class HylSolverConfig:
    """Tuning of the HYL root scan.

    Attributes
    ----------
    chi_prefix : int
        Indices ``1..chi_prefix`` may take the lower Lambert branch.
    chi_support_max : int
        At most this many indices take the lower branch.
    delta_grid : int
        Grid points used to bracket roots of ``delta - g^chi(delta)``.
    delta_range_factor : float
        The scan covers ``[0, factor * max(max g^0, mu/a)]``.
    tol : float
        Objective difference below which two candidates tie.
    k_max : int
        Length of the explicit prefix of returned sequences.
    """

    chi_prefix: int = 8
    chi_support_max: int = 2
    delta_grid: int = 2048
    delta_range_factor: float = 1.25
    tol: float = 1e-10
    k_max: int = DEFAULT_K_MAX


class HylProblem:
    """Reduced scalar problem for the HYL zero at fixed parameters."""

    def __init__(self, params: ModelParams, cfg: HylSolverConfig):
        if params.b <= 0.0:
            raise DomainError("HylProblem needs b > 0")
        self.params = params
        self.cfg = cfg
        self.w = params.weights
        self.beta = params.beta
        self.mu = params.mu_eff
        self.a = params.a
        self.b = params.b
        self.bbeta = params.b * params.beta
        self.c = self.bbeta / self.w.thermal
        self.js = np.arange(1, cfg.chi_prefix + 1, dtype=np.float64)
        self.eta_gap = self._eta_gap()
        top = min(self.eta_gap, 0.0)
        self.k0 = mdl._series_start(self.w, self.bbeta, top, cfg.chi_prefix)

    def _eta_gap(self) -> float:
        """Largest admissible exponent: all ``u_j >= -1/e`` iff ``eta <= eta_gap``."""
        d, beta = self.w.d, self.beta
        logc = math.log(self.c) + 1.0
        if d >= 3:
            j_hi = math.ceil(math.exp(logc / (0.5 * d - 1.0))) + 1 if logc > 0 else 1
        else:
            j_hi = 1 if d == 2 else 1_000_000
        js = np.arange(1, j_hi + 1, dtype=np.float64)
        excess = logc + (1.0 - 0.5 * d) * np.log(js)
        # rounding-level excess (beta exactly at the threshold) is no gap
        excess = np.where(excess > 1e-12, excess, 0.0)
        if not np.any(excess > 0.0):
            return 0.0
        return float(np.min(-np.maximum(excess, 0.0) / (beta * js)))

    def eta(self, delta):
        delta = np.asarray(delta, dtype=np.float64)
        mu, a, b = self.mu, self.a, self.b
        return np.where(a * delta >= mu, mu - a * delta, b / (a - b) * (a * delta - mu))

    def admissible(self, delta):
        return self.eta(delta) <= self.eta_gap * (1.0 - 1e-13) + 0.0

    def g0(self, delta) -> np.ndarray:
        """Density of the principal-branch sequence at each ``delta``."""
        eta = np.minimum(self.eta(delta), 0.0)
        s = mdl.lambert_power_sums(self.w, self.bbeta, eta, 0, terms=((1, -1),),
                                   series_start=self.k0)[0]
        return -s / self.bbeta

    def branch_terms(self, delta):
        """``(W_0(u_j), W_-1(u_j))`` for ``j <= chi_prefix``, shape ``(n, J)``."""
        eta = np.atleast_1d(np.minimum(self.eta(delta), 0.0))
        logu = (math.log(self.bbeta) + 2.0 * np.log(self.js)[None, :]
                + self.beta * eta[:, None] * self.js[None, :]
                - math.log(self.w.thermal) - (1.0 + 0.5 * self.w.d) * np.log(self.js)[None, :])
        u = np.maximum(-np.exp(logu), -specfun.INV_E)
        return specfun.lambert_w_array(u, 0), specfun.lambert_w_array(u, -1)

    def correction(self, w0, wm1, chi) -> np.ndarray:
        if not chi:
            return np.zeros(w0.shape[0])
        idx = np.array(chi) - 1
        return ((w0[:, idx] - wm1[:, idx]) / self.js[idx]).sum(axis=1) / self.bbeta

    def g(self, delta: float, chi=()) -> float:
        """``g^chi(delta)``; nan outside the admissible set."""
        dd = np.array([float(delta)])
        if not self.admissible(dd)[0]:
            return math.nan
        w0, wm1 = self.branch_terms(dd)
        return float(self.g0(dd)[0] + self.correction(w0, wm1, chi)[0])

    def chis(self):
        J, S = self.cfg.chi_prefix, self.cfg.chi_support_max
        out = [()]
        for size in range(1, S + 1):
            out.extend(itertools.combinations(range(1, J + 1), size))
        return out

    def g0_max(self) -> float:
        """Largest value of ``g^0`` on the admissible set."""
        top = min(self.eta_gap, 0.0)
        if top == 0.0:
            dtop = max(self.mu, 0.0) / self.a
        else:
            dtop = (self.mu - top) / self.a
        return float(self.g0(np.array([dtop]))[0])

    def breakpoints(self):
        pts = []
        mu, a, b = self.mu, self.a, self.b
        if mu >= 0.0:
            pts.append(mu / a)
        if self.eta_gap < 0.0:
            pts.append((mu - self.eta_gap) / a)
            left = mu / a + self.eta_gap * (a - b) / (a * b)
            if left >= 0.0:
                pts.append(left)
        return pts

    def _grid(self, lo, hi, n):
        pts = np.concatenate([np.linspace(lo, hi, n),
                              [p for p in self.breakpoints() if lo <= p <= hi]])
        pts = np.unique(pts)
        return pts[self.admissible(pts)]

    def _scan(self, grid, g0, w0, wm1, chi, seg_id):
        F = grid - g0 - self.correction(w0, wm1, chi)
        f1, f2 = F[:-1], F[1:]
        ok = (seg_id[:-1] == seg_id[1:]) & np.isfinite(f1) & np.isfinite(f2)
        roots = [float(x) for x in grid[:-1][ok & (f1 == 0.0)]]
        for i in np.nonzero(ok & (f1 * f2 < 0.0))[0]:
            roots.append(self._refine(chi, float(grid[i]), float(grid[i + 1])))
        if F.size and F[-1] == 0.0:
            roots.append(float(grid[-1]))
        return roots, F

    def _refine(self, chi, lo, hi):
        def f(x):
            return x - self.g(x, chi)
        return brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)

    def _segments(self, grid):
        # consecutive admissible points belong to one segment unless a gap
        # separates them
        seg = np.zeros(grid.size, dtype=int)
        if self.eta_gap < 0.0 and grid.size:
            mid = 0.5 * (grid[1:] + grid[:-1])
            broken = ~self.admissible(mid)
            seg[1:] = np.cumsum(broken)
        return seg

    def solve(self):
        """All ``(chi, delta*)`` roots of ``delta = g^chi(delta)``."""
        cfg = self.cfg
        gmax = self.g0_max()
        base = max(max(self.mu, 0.0) / self.a, gmax if math.isfinite(gmax) else 0.0)
        hi0 = cfg.delta_range_factor * base + 1e-12
        if not math.isfinite(gmax):
            hi0 = max(hi0, 1.0)
            while not hi0 - self.g(hi0) > 0.0:
                hi0 *= 2.0
                if hi0 > 1e300:
                    raise NonConvergenceError("cannot bracket HYL roots")
        grid = self._grid(0.0, hi0, cfg.delta_grid)
        g0 = self.g0(grid)
        w0, wm1 = self.branch_terms(grid)
        seg = self._segments(grid)
        found = []
        for chi in self.chis():
            roots, F = self._scan(grid, g0, w0, wm1, chi, seg)
            if chi and F.size and F[-1] > 0.0:
                # g^chi grows linearly with slope > 1, so any further
                # roots lie before the first point where F turns negative
                hi = hi0
                while not (hi - self.g(hi, chi) < 0.0):
                    hi *= 2.0
                    if hi > 1e300:
                        raise NonConvergenceError("cannot bracket HYL roots")
                ext = self._grid(hi0, hi, max(cfg.delta_grid // 4, 16))
                r2, _ = self._scan(ext, self.g0(ext), *self.branch_terms(ext), chi,
                                   self._segments(ext))
                roots += [r for r in r2 if r > hi0]
            for r in sorted(set(roots)):
                found.append((self._canonical_chi(chi, r), r))
        return _dedupe(found)

    def _canonical_chi(self, chi, delta):
        """Drop indices whose two branches coincide (``u_j = -1/e``) at ``delta``."""
        if not chi:
            return chi
        w0, wm1 = self.branch_terms(np.array([delta]))
        return tuple(j for j in chi if abs(w0[0, j - 1] - wm1[0, j - 1]) > 1e-5)


def _dedupe(found):
    out = []
    for chi, r in found:
        if any(c == chi and abs(r - s) <= 1e-9 * max(1.0, abs(r)) for c, s in out):
            continue
        out.append((chi, r))
    return out


def _hyl_solution(prob: HylProblem, chi, delta) -> MinimizerSolution:
    params = prob.params
    eta = float(min(prob.eta(delta), 0.0))
    ks = np.arange(1, prob.cfg.k_max + 1, dtype=np.float64)
    vals = mdl.lambert_values(prob.w, prob.bbeta, eta, ks, {j: -1 for j in chi})
    xi = CycleCounts(vals, LambertTail(prob.w, eta, prob.bbeta)).trimmed()
    resid = delta - prob.g(delta, chi)
    info = {"eta": eta, "fixed_point_residual": resid,
            "side": "upper" if params.a * delta >= params.mu_eff else "lower"}
    return MinimizerSolution(xi, mdl.objective(params, xi), delta_star=delta,
                             chi=tuple(chi), info=info)


def hyl_solutions(params: ModelParams, cfg: HylSolverConfig | None = None):
    """Every stationary candidate ``(chi, delta*)`` of the HYL objective.

    Returns
    -------
    list of MinimizerSolution
        Sorted by branch support, then by ``delta*``.
    """
    cfg = cfg or HylSolverConfig()
    if params.model is not Model.HYL:
        params = replace(params, model=Model.HYL)
    return list(_hyl_solutions_cached(params, cfg))


@functools.lru_cache(maxsize=256)
def _hyl_solutions_cached(params: ModelParams, cfg: HylSolverConfig):
    # sweeps and derivative checks revisit the same parameters many times
    return tuple(_hyl_solutions_uncached(params, cfg))


def _hyl_solutions_uncached(params: ModelParams, cfg: HylSolverConfig):
    if params.b == 0.0:
        sol = zero_pmf(replace(params, model=Model.PMF), cfg.k_max)
        sol.objective = mdl.objective(params, sol.xi)
        return [sol]
    prob = HylProblem(params, cfg)
    return [_hyl_solution(prob, chi, r) for chi, r in prob.solve()]


def zero_hyl(params: ModelParams, cfg: HylSolverConfig | None = None) -> MinimizerSolution:
    """HYL zero: the candidate of :func:`hyl_solutions` with least objective.

    Ties (within ``cfg.tol``) resolve to the smaller density and are
    reported with ``unique = False``.
    """
    cfg = cfg or HylSolverConfig()
    sols = hyl_solutions(params, cfg)
    if not sols:
        raise NonConvergenceError("no HYL stationary point found")
    best = min(s.objective for s in sols)
    tied = [s for s in sols if s.objective - best <= cfg.tol * max(1.0, abs(best))]
    pick = min(tied, key=lambda s: s.density)
    # candidates are shared with the solution cache; return a copy
    info = dict(pick.info, n_solutions=len(sols),
                candidates=[(s.chi, s.delta_star, s.objective) for s in sols])
    return replace(pick, unique=len(tied) == 1, info=info)


def zero(params: ModelParams, k_max: int = DEFAULT_K_MAX,
         hyl_config: HylSolverConfig | None = None) -> MinimizerSolution:
    """Dispatch to the zero of ``params.model``."""
    m = params.model
    if m is Model.IDEAL:
        return zero_ideal(params, k_max)
    if m is Model.CMF:
        return zero_cmf(params, k_max)
    if m is Model.PMF:
        return zero_pmf(params, k_max)
    cfg = hyl_config or HylSolverConfig(k_max=k_max)
    return zero_hyl(params, cfg)


def fixed_point_residual(sol: MinimizerSolution) -> float:
    """Residual of the scalar equation solved for ``sol``."""
    return float(sol.info.get("fixed_point_residual", 0.0))
