"""Thermodynamics: pressures, their mu-derivatives, condensates, free energies.

The pressure of each model is the value of a variational problem whose
minimiser is computed in :mod:`boseldp.minimize`; closed forms are used
wherever they exist and the variational form is kept as an independent
route (:func:`pressure_variational`).
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import minimize as mz
from . import specfun
from .errors import DomainError
from .extended import UNDEFINED
from .minimize import HylSolverConfig
from .model import Model, ModelParams, Weights

FD_STEPS = (1e-4, 1e-5, 1e-6)


class Regime(str, enum.Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"
    NONSMOOTH = "NonSmooth"


@dataclass
class ThermoPoint:
    """Thermodynamic state at one chemical potential."""

    params: ModelParams
    pressure: float
    dp_dmu: object
    condensate: object
    regime: Regime
    info: dict = field(default_factory=dict)

    @property
    def mu_eff(self) -> float:
        return self.params.mu_eff


@dataclass
class FreeEnergyPoint:
    """Free energy at density ``rho`` and the maximising chemical potential.

    ``alpha_star`` is ``None`` when the supremum saturates at 0.
    """

    rho: float
    f: float
    alpha_star: float | None
    saturated: bool


def _ideal_pressure(w: Weights, mu: float) -> float:
    return w.qbar(mu) / w.beta


def _cmf_pressure(w: Weights, a: float, mu: float) -> float:
    if a == 0.0:
        return _ideal_pressure(w, mu)
    K = a * w.beta * w.qbar(mu)
    W = specfun.lambert_w(K, 0)
    return W * (1.0 + 0.5 * W) / (a * w.beta ** 2)


def pressure(params: ModelParams, hyl_config: HylSolverConfig | None = None) -> float:
    """Pressure ``p(beta, mu)`` of the model (in terms of ``mu + alpha``).

    Raises
    ------
    DomainError
        For Ideal or CMF with ``mu + alpha > 0`` (infinite pressure).
    """
    w = params.weights
    mu = params.mu_eff
    m = params.model
    if m in (Model.IDEAL, Model.CMF) and mu > 0.0:
        raise DomainError("pressure is infinite for mu + alpha > 0")
    if m is Model.IDEAL:
        return _ideal_pressure(w, mu)
    if m is Model.CMF:
        return _cmf_pressure(w, params.a, mu)
    if m is Model.PMF:
        a = params.a
        rho_c = w.rho_c
        if math.isfinite(rho_c) and mu >= a * rho_c:
            return mu * mu / (2.0 * a) + _ideal_pressure(w, 0.0)
        sol = mz.zero_pmf(params)
        delta = sol.delta_star
        return 0.5 * a * delta * delta + w.qbar(sol.info["eta"]) / w.beta
    sol = mz.zero_hyl(params, hyl_config)
    return _ideal_pressure(w, 0.0) - sol.objective / params.beta


def pressure_variational(params: ModelParams,
                         hyl_config: HylSolverConfig | None = None) -> float:
    """Pressure as ``p_ref - inf(I + beta H_lsc) / beta``, via the zero."""
    w = params.weights
    ref = params.mu_eff if params.model in (Model.IDEAL, Model.CMF) else 0.0
    sol = mz.zero(params, hyl_config=hyl_config)
    return _ideal_pressure(w, ref) - sol.objective / params.beta


def critical_density(params: ModelParams) -> float:
    """Critical density; ``inf`` for ``d <= 2``.

    CMF rescales the ideal value by ``W0(K0)/K0`` with ``K0 = a beta qbar^(0)``.
    """
    w = params.weights
    rho_c = w.rho_c
    if params.model is Model.CMF and params.a > 0.0 and math.isfinite(rho_c):
        K0 = params.a * params.beta * w.qbar(0.0)
        return specfun.lambert_w(K0, 0) / K0 * rho_c
    return rho_c


def _hyl_family_slope(params: ModelParams, sol) -> float:
    dens = sol.density
    a, b, mu = params.a, params.b, params.mu_eff
    return dens + max(mu - a * dens, 0.0) / (a - b)


def one_sided_differences(params: ModelParams, steps=FD_STEPS,
                          hyl_config: HylSolverConfig | None = None):
    """Left and right difference quotients of the pressure in ``mu``."""
    p0 = pressure(params, hyl_config)
    out = []
    for h in steps:
        pl = pressure(replace(params, mu=params.mu - h), hyl_config)
        pr = pressure(replace(params, mu=params.mu + h), hyl_config)
        out.append((h, (p0 - pl) / h, (pr - p0) / h))
    return p0, out


def is_nonsmooth(params: ModelParams, hyl_config: HylSolverConfig | None = None) -> bool:
    """Finite-difference kink detector.

    The gap between left and right quotients shrinks linearly in the step
    for a smooth pressure and stays put at a kink.
    """
    p0, diffs = one_sided_differences(params, FD_STEPS, hyl_config)
    gaps = [abs(r - l) for _, l, r in diffs]
    h_min = FD_STEPS[-1]
    noise = 1e-13 * max(1.0, abs(p0)) / h_min
    slope = max(abs(diffs[-1][1]), abs(diffs[-1][2]), 1.0)
    return gaps[-1] > max(100.0 * noise, 1e-7 * slope) and gaps[-1] > 0.5 * gaps[0]


def dpressure_dmu(params: ModelParams, hyl_config: HylSolverConfig | None = None):
    """Derivative of the pressure in ``mu``.

    Returns a float, ``inf`` (ideal gas at ``mu = 0``, ``d <= 2``) or
    :data:`~boseldp.extended.UNDEFINED` at a HYL kink.
    """
    w = params.weights
    mu = params.mu_eff
    m = params.model
    if m in (Model.IDEAL, Model.CMF) and mu > 0.0:
        raise DomainError("pressure is infinite for mu + alpha > 0")
    if m is Model.IDEAL:
        return w.rho(mu)
    if m is Model.CMF:
        K = params.a * params.beta * w.qbar(mu)
        factor = specfun.lambert_w(K, 0) / K if K > 0.0 else 1.0
        return factor * w.rho(mu)
    if m is Model.PMF:
        a = params.a
        rho_c = w.rho_c
        if math.isfinite(rho_c) and mu >= a * rho_c:
            return mu / a
        sol = mz.zero_pmf(params)
        return w.rho(sol.info["eta"])
    sol = mz.zero_hyl(params, hyl_config)
    if not sol.unique:
        return UNDEFINED
    return _hyl_family_slope(params, sol)


def condensate(params: ModelParams, convention: str = "empty",
               hyl_config: HylSolverConfig | None = None):
    """Condensate density ``Delta(beta, mu)``.

    Parameters
    ----------
    convention : {"empty", "periodic"}
        Ideal-gas (and CMF) value at ``mu = 0`` for ``d >= 3``: 0 under
        empty/Dirichlet boundary conditions, ``inf`` under periodic ones.
    """
    if convention not in ("empty", "periodic"):
        raise DomainError(f"unknown boundary convention {convention!r}")
    w = params.weights
    mu = params.mu_eff
    m = params.model
    if m in (Model.IDEAL, Model.CMF):
        if mu > 0.0:
            raise DomainError("condensate undefined for mu + alpha > 0")
        if mu < 0.0:
            return 0.0
        if params.d <= 2 or convention == "periodic":
            return math.inf
        return 0.0
    a = params.a
    if m is Model.PMF:
        return max(mu / a - w.rho_c, 0.0)
    slope = dpressure_dmu(params, hyl_config)
    if slope is UNDEFINED:
        return UNDEFINED
    sol = mz.zero_hyl(params, hyl_config)
    return a / (a - params.b) * max(mu / a - sol.density, 0.0)


def _solve_density(target: float, slope_fn, beta: float) -> float:
    """Find ``alpha < 0`` with ``slope_fn(alpha) = target`` (increasing)."""
    lo = -1e3 / beta
    while slope_fn(lo) > target:
        lo *= 2.0
        if lo < -1e300:
            raise DomainError("density too small to invert")
    return mz._bisect_increasing(lambda x: slope_fn(x) - target, lo, 0.0)


def free_energy(params: ModelParams, rho: float) -> FreeEnergyPoint:
    """Free energy ``f(beta, rho) = sup_alpha (alpha rho - p(beta, alpha))``.

    Available for Ideal and CMF (Legendre transform of their pressure) and
    PMF (ideal value plus ``a rho^2 / 2``).  The supremum saturates at
    ``alpha = 0`` above the critical density.
    """
    rho = float(rho)
    if not rho >= 0.0:
        raise DomainError(f"density must be >= 0, got {rho!r}")
    m = params.model
    if m is Model.HYL:
        raise DomainError("free energy is not provided for the HYL model")
    w = params.weights
    beta = params.beta
    if m is Model.PMF:
        base = free_energy(replace(params, model=Model.IDEAL, mu=0.0, alpha=0.0, a=0.0), rho)
        return FreeEnergyPoint(rho, base.f + 0.5 * params.a * rho * rho,
                               base.alpha_star, base.saturated)
    a = params.a if m is Model.CMF else 0.0

    def p_of(alpha):
        return _cmf_pressure(w, a, alpha)

    def slope(alpha):
        if a == 0.0:
            return w.rho(alpha)
        K = a * beta * w.qbar(alpha)
        factor = specfun.lambert_w(K, 0) / K if K > 0.0 else 1.0
        return factor * w.rho(alpha)

    if rho == 0.0:
        return FreeEnergyPoint(0.0, 0.0, -math.inf, False)
    rho_c = critical_density(replace(params, model=Model.CMF if a else Model.IDEAL, mu=0.0, alpha=0.0))
    if rho >= rho_c:
        return FreeEnergyPoint(rho, -p_of(0.0), None, True)
    alpha = _solve_density(rho, slope, beta)
    return FreeEnergyPoint(rho, rho * alpha - p_of(alpha), alpha, False)


def _ideal_density_rate(w: Weights, alpha: float, x: float, rho_c: float) -> float:
    if x < 0.0 or x > rho_c:
        return math.inf
    params = ModelParams(Model.IDEAL, w.d, w.beta)
    f = free_energy(params, x).f
    return w.beta * (_ideal_pressure(w, alpha) + f - alpha * x)


def _golden_min(fn, lo, hi, iters=200):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - g * (hi - lo)
    d = lo + g * (hi - lo)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = fn(d)
    x = 0.5 * (lo + hi)
    return x, fn(x)


def density_rate(params: ModelParams, x: float, kind: str = "ideal",
                 grid: int = 400) -> float:
    """Rate function of the particle density.

    ``kind="ideal"``: ``J_alpha(x) = beta (p(beta, alpha) + f(beta, x) - alpha x)``
    on ``[0, rho_c]`` and ``inf`` elsewhere, for the ideal gas at
    ``alpha = params.alpha``.

    ``kind="pmf"``: ``beta(-mu x + a x^2 / 2) + J_alpha(x)`` minus its
    infimum, with ``mu = params.mu`` entering the tilt.
    """
    w = params.weights
    alpha = params.alpha
    rho_c = w.rho_c
    x = float(x)
    if kind == "ideal":
        return _ideal_density_rate(w, alpha, x, rho_c)
    if kind != "pmf":
        raise DomainError(f"unknown density-rate kind {kind!r}")
    mu, a = params.mu, params.a
    if a <= 0.0:
        raise DomainError("PMF density rate needs a > 0")

    def raw(y):
        return w.beta * (-mu * y + 0.5 * a * y * y) + _ideal_density_rate(w, alpha, y, rho_c)

    value = raw(x)
    if math.isinf(value):
        return value
    return value - density_rate_normalizer(params, grid)


@functools.lru_cache(maxsize=64)
def density_rate_normalizer(params: ModelParams, grid: int = 400) -> float:
    """Infimum of the unnormalised PMF density rate (grid + golden section)."""
    w = params.weights
    alpha, mu, a = params.alpha, params.mu, params.a
    rho_c = w.rho_c

    def raw(y):
        return w.beta * (-mu * y + 0.5 * a * y * y) + _ideal_density_rate(w, alpha, y, rho_c)

    if math.isfinite(rho_c):
        hi = rho_c
    else:
        hi = max(2.0 * w.rho(alpha), 2.0 * max(mu, 0.0) / a, 1.0)
        while raw(hi) < raw(0.5 * hi):
            hi *= 2.0
    ys = np.linspace(0.0, hi, grid)
    vals = np.array([raw(y) for y in ys])
    i = int(np.argmin(vals))
    lo_b = ys[max(i - 1, 0)]
    hi_b = ys[min(i + 1, grid - 1)]
    _, best = _golden_min(raw, lo_b, hi_b)
    return min(best, float(vals[i]))


def _regime_pmf(params: ModelParams) -> Regime:
    rho_c = params.weights.rho_c
    if not math.isfinite(rho_c):
        return Regime.SUBCRITICAL
    crit = params.a * rho_c
    mu = params.mu_eff
    if abs(mu - crit) <= 1e-12 * max(1.0, abs(crit)):
        return Regime.CRITICAL
    return Regime.SUPERCRITICAL if mu > crit else Regime.SUBCRITICAL


def thermo_point(params: ModelParams, convention: str = "empty",
                 hyl_config: HylSolverConfig | None = None) -> ThermoPoint:
    """Pressure, slope, condensate and regime at one parameter set."""
    m = params.model
    p = pressure(params, hyl_config)
    dp = dpressure_dmu(params, hyl_config)
    cond = condensate(params, convention, hyl_config)
    if m in (Model.IDEAL, Model.CMF):
        regime = Regime.CRITICAL if params.mu_eff == 0.0 else Regime.SUBCRITICAL
    elif m is Model.PMF:
        regime = _regime_pmf(params)
    elif dp is UNDEFINED:
        regime = Regime.NONSMOOTH
    else:
        regime = Regime.SUPERCRITICAL if cond > 0.0 else Regime.SUBCRITICAL
    return ThermoPoint(params, p, dp, cond, regime)


@dataclass
class SweepResult:
    """Rows of a chemical-potential sweep plus model-specific metadata."""

    points: list
    meta: dict = field(default_factory=dict)


def sweep(params: ModelParams, mu_values, convention: str = "empty",
          hyl_config: HylSolverConfig | None = None) -> SweepResult:
    """Thermodynamic quantities along a grid of ``mu`` (``alpha`` fixed).

    For HYL the grid is first scanned for solution families; the row
    closest to a located kink is reported as ``NonSmooth`` with an
    undefined slope and condensate.
    """
    mus = [float(m) for m in mu_values]
    if params.model is not Model.HYL:
        return SweepResult([thermo_point(replace(params, mu=m), convention, hyl_config)
                            for m in mus])
    scan = hyl_family_scan(params, mus, hyl_config)
    kink_rows = set()
    for kink in scan.kinks:
        kink_rows.add(int(np.argmin([abs(m - kink) for m in mus])))
    points = []
    for i, m in enumerate(mus):
        p_i = replace(params, mu=m)
        sol = scan.best[i]
        pr = params.weights.qbar(0.0) / params.beta - sol.objective / params.beta
        if i in kink_rows:
            points.append(ThermoPoint(p_i, pr, UNDEFINED, UNDEFINED, Regime.NONSMOOTH,
                                      {"kink_mu": min(scan.kinks, key=lambda k: abs(k - m))}))
            continue
        slope = _hyl_family_slope(p_i, sol)
        cond = p_i.a / (p_i.a - p_i.b) * max(p_i.mu_eff / p_i.a - sol.density, 0.0)
        regime = Regime.SUPERCRITICAL if cond > 0.0 else Regime.SUBCRITICAL
        points.append(ThermoPoint(p_i, pr, slope, cond, regime,
                                  {"family": scan.best_labels[i]}))
    return SweepResult(points, {"hyl_family_scan": scan.summary()})


@dataclass
class FamilyScan:
    """Solution families of the HYL problem along a ``mu`` grid.

    ``rows`` holds ``(mu, label, chi, delta, pressure)`` tuples.  Labels of
    principal-branch families follow the density order at fixed ``mu``:
    0 is the family with ``D >= mu/a``, 1 and 2 the larger and smaller of
    the ones below ``mu/a`` (a lone one below is labelled 2).
    """

    params: ModelParams
    mus: list
    rows: list
    best: list
    best_labels: list
    mu_lower: float | None
    mu_upper: float
    kinks: list
    chi0_counts: list

    def summary(self) -> dict:
        return {"mu_lower": self.mu_lower, "mu_upper": self.mu_upper,
                "kinks": list(self.kinks), "chi0_counts": list(self.chi0_counts)}


def _labels(params: ModelParams, sols):
    a, mu = params.a, params.mu_eff
    out = {}
    chi0 = [s for s in sols if not s.chi]
    upper = [s for s in chi0 if a * s.delta_star >= mu]
    lower = sorted([s for s in chi0 if a * s.delta_star < mu], key=lambda s: -s.delta_star)
    for s in upper:
        out[id(s)] = 0
    if len(lower) >= 2:
        out[id(lower[0])] = 1
        for s in lower[1:]:
            out[id(s)] = 2
    elif lower:
        out[id(lower[0])] = 2
    by_chi = {}
    for s in sols:
        if s.chi:
            by_chi.setdefault(s.chi, []).append(s)
    for chi, group in by_chi.items():
        for r, s in enumerate(sorted(group, key=lambda s: -s.delta_star)):
            out[id(s)] = (chi, r)
    return out


def hyl_mu_upper(params: ModelParams) -> float:
    """Largest ``mu`` (Hamiltonian, ``alpha`` fixed) with a solution at
    ``delta >= mu/a``: ``mu + alpha = a g^0(mu/a)``."""
    from .model import lambert_power_sums
    bb = params.b * params.beta
    s = lambert_power_sums(params.weights, bb, np.array([0.0]), 0)[0][0]
    return params.a * (-s / bb) - params.alpha


def _family_pressure(params, sol):
    return params.weights.qbar(0.0) / params.beta - sol.objective / params.beta


def hyl_family_scan(params: ModelParams, mu_values,
                    cfg: HylSolverConfig | None = None, refine: bool = True) -> FamilyScan:
    """Track HYL solution families across a grid of ``mu``.

    Reports the fold ``mu_lower`` where two extra principal-branch
    solutions appear (refined by bisection when ``refine``), the exact
    upper end ``mu_upper`` of the high-density family, and every ``mu``
    where the pressure-maximising family changes (located by root finding
    on the pressure difference of the two families).
    """
    cfg = cfg or HylSolverConfig()
    mus = [float(m) for m in mu_values]
    rows, best, best_labels, counts = [], [], [], []
    for m in mus:
        p = replace(params, mu=m)
        sols = mz.hyl_solutions(p, cfg)
        labels = _labels(p, sols)
        counts.append(sum(1 for s in sols if not s.chi))
        for s in sols:
            rows.append((m, labels[id(s)], s.chi, s.delta_star, _family_pressure(p, s)))
        pick = max(sols, key=lambda s: (_family_pressure(p, s), -s.density))
        best.append(pick)
        best_labels.append(labels[id(pick)])
    mu_upper = hyl_mu_upper(params)
    mu_lower = None
    for i in range(1, len(mus)):
        if counts[i - 1] < 3 <= counts[i]:
            mu_lower = _refine_fold(params, mus[i - 1], mus[i], cfg) if refine else mus[i]
            break
    kinks = []
    for i in range(1, len(mus)):
        la, lb = best_labels[i - 1], best_labels[i]
        if la != lb:
            kinks.append(_locate_switch(params, mus[i - 1], mus[i], la, lb, cfg)
                         if refine else 0.5 * (mus[i - 1] + mus[i]))
    return FamilyScan(params, mus, rows, best, best_labels, mu_lower, mu_upper,
                      kinks, counts)


def _refine_fold(params, lo, hi, cfg, iters=30):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        n = sum(1 for s in mz.hyl_solutions(replace(params, mu=mid), cfg) if not s.chi)
        if n >= 3:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-9 * max(1.0, abs(hi)):
            break
    return hi


def _locate_switch(params, lo, hi, la, lb, cfg):
    def diff(m):
        p = replace(params, mu=m)
        sols = mz.hyl_solutions(p, cfg)
        labels = _labels(p, sols)
        pa = [_family_pressure(p, s) for s in sols if labels[id(s)] == la]
        pb = [_family_pressure(p, s) for s in sols if labels[id(s)] == lb]
        if not pa or not pb:
            return math.nan
        return max(pa) - max(pb)

    try:
        return brentq(diff, lo, hi, xtol=1e-10 * max(1.0, abs(hi)), maxiter=100)
    except ValueError:
        # one family is missing at an endpoint; fall back to the midpoint
        return 0.5 * (lo + hi)
