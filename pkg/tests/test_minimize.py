"""Zeros of the rate functions."""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boseldp import minimize as mz, model as mdl, specfun
from boseldp.errors import DomainError
from boseldp.model import Model, ModelParams

BETA_STAR = math.e ** 2 / (4 * math.pi) ** 3


def test_ideal_zero_is_weight_sequence():
    p = ModelParams("ideal", 3, 1.0, mu=-0.3)
    sol = mz.zero(p, k_max=50)
    ks = np.arange(1, 51, dtype=np.float64)
    np.testing.assert_allclose(sol.xi.values[:50], p.weights.q(ks, -0.3), rtol=1e-15)
    assert sol.objective == 0.0 or abs(sol.objective) < 1e-12
    assert sol.density == pytest.approx(p.weights.rho(-0.3), rel=1e-13)


def test_zero_rejects_positive_mu_for_ideal_and_cmf():
    for m in ("ideal", "cmf"):
        with pytest.raises(DomainError):
            mz.zero(ModelParams(m, 3, 1.0, mu=0.1, a=1.0))


@pytest.mark.parametrize("beta,mu,a", [(1.0, -0.5, 1.0), (0.3, 0.0, 10.0), (3.0, -0.05, 0.1)])
def test_cmf_zero_solves_mass_equation(beta, mu, a):
    p = ModelParams("cmf", 3, beta, mu=mu, a=a)
    sol = mz.zero(p)
    qb = p.weights.qbar(mu)
    gamma = sol.xi.mass()
    assert gamma == pytest.approx(qb * math.exp(-a * beta * gamma), rel=1e-12)
    assert gamma == pytest.approx(specfun.lambert_w(a * beta * qb) / (a * beta), rel=1e-13)
    assert abs(mz.fixed_point_residual(sol)) < 1e-12


def test_pmf_plateau_above_threshold():
    p = ModelParams("pmf", 3, 1.0, mu=2.0, a=1.0)
    sol = mz.zero(p)
    assert sol.info["plateau"]
    assert sol.delta_star == p.weights.rho_c
    assert sol.info["eta"] == 0.0


@pytest.mark.parametrize("d,mu", [(1, 0.3), (2, 1e-4), (2, 0.5), (3, 0.01), (3, -1.0), (4, 0.0)])
def test_pmf_density_equation(d, mu):
    p = ModelParams("pmf", d, 1.0, mu=mu, a=1.0)
    sol = mz.zero(p)
    if not sol.info["plateau"]:
        h = mz.pmf_density_map(p, sol.delta_star)
        assert sol.delta_star == pytest.approx(h, rel=1e-11)
        assert sol.info["eta"] == pytest.approx(mu - p.a * sol.delta_star, abs=1e-12)
    assert abs(sol.density - sol.delta_star) <= 1e-9 * max(1.0, sol.delta_star)


def test_truncated_pmf_is_unclamped():
    # with finitely many lengths the exponent may be positive
    p = ModelParams("pmf", 3, 1.0, mu=0.5, a=0.5)
    sol = mz.zero_pmf(p, k_max=5, truncated=True)
    assert sol.info["eta"] > 0.0
    ks = np.arange(1, 6, dtype=np.float64)
    assert sol.delta_star == pytest.approx(float(ks @ sol.xi.values), rel=1e-12)
    assert sol.xi.tail.sums(5).density == 0.0


def test_truncated_pmf_minimises_finite_objective():
    p = ModelParams("pmf", 3, 1.0, mu=0.2, a=1.0)
    sol = mz.zero_pmf(p, k_max=3, truncated=True)
    ks = np.arange(1, 4, dtype=np.float64)
    q0 = p.weights.q(ks, 0.0)

    def obj(x):
        ent = np.sum(x * np.log(x / q0) - x + q0)
        D = ks @ x
        return ent + p.beta * (-p.mu * D + 0.5 * p.a * D * D)

    assert obj(sol.xi.values) == pytest.approx(sol.objective, rel=1e-12)
    rng = np.random.default_rng(3)
    for _ in range(50):
        y = sol.xi.values * np.exp(0.05 * rng.standard_normal(3))
        assert obj(y) >= sol.objective - 1e-14


@settings(max_examples=25)
@given(st.sampled_from(["ideal", "cmf", "pmf"]), st.integers(1, 4),
       st.floats(min_value=0.2, max_value=4.0), st.floats(min_value=-2.0, max_value=0.0),
       st.floats(min_value=0.1, max_value=5.0))
def test_zero_is_stationary(model, d, beta, mu, a):
    p = ModelParams(model, d, beta, mu=mu, a=0.0 if model == "ideal" else a)
    sol = mz.zero(p)
    g = mdl.rate_gradient(p, sol.xi)
    assert np.max(np.abs(g)) <= 1e-8


def test_hyl_three_solutions_inside_interval():
    p = ModelParams("hyl", 3, BETA_STAR, mu=360.0, a=2.0, b=1.0)
    sols = mz.hyl_solutions(p)
    principal = sorted(s.delta_star for s in sols if s.chi == ())
    assert len(principal) == 3
    prob = mz.HylProblem(p, mz.HylSolverConfig())
    for s in sols:
        assert abs(s.delta_star - prob.g(s.delta_star, s.chi)) <= 1e-9 * s.delta_star
        assert s.density == pytest.approx(s.delta_star, rel=1e-8)


def test_hyl_single_solution_below_interval():
    p = ModelParams("hyl", 3, BETA_STAR, mu=100.0, a=2.0, b=1.0)
    assert sum(1 for s in mz.hyl_solutions(p) if s.chi == ()) == 1


def test_hyl_zero_picks_least_objective_and_does_not_touch_cache():
    p = ModelParams("hyl", 3, BETA_STAR, mu=360.0, a=2.0, b=1.0)
    best = mz.zero(p)
    sols = mz.hyl_solutions(p)
    assert best.objective == min(s.objective for s in sols)
    assert best.info["n_solutions"] == len(sols)
    assert all("n_solutions" not in s.info for s in sols)


def test_hyl_with_zero_b_matches_pmf():
    p = ModelParams("pmf", 3, 1.0, mu=0.3, a=1.0)
    h = mz.zero(replace(p, model=Model.HYL, b=0.0))
    z = mz.zero(p)
    assert h.delta_star == pytest.approx(z.delta_star, rel=1e-14)
    assert h.objective == pytest.approx(z.objective, rel=1e-12, abs=1e-14)


def test_hyl_gap_opens_only_above_threshold_temperature():
    cfg = mz.HylSolverConfig()
    for f in (1.0, 2.0):
        p = ModelParams("hyl", 3, f * BETA_STAR, mu=100.0, a=2.0, b=1.0)
        assert mz.HylProblem(p, cfg).eta_gap == 0.0
    q = ModelParams("hyl", 3, 0.5 * BETA_STAR, mu=100.0, a=2.0, b=1.0)
    gap = mz.HylProblem(q, cfg).eta_gap
    assert gap < 0.0
    # at the gap edge the first Lambert argument sits exactly at -1/e
    u1 = q.b * q.beta * math.exp(q.beta * gap) / q.weights.thermal
    assert u1 == pytest.approx(1.0 / math.e, rel=1e-12)


def test_lower_branch_solutions_are_fixed_points():
    p = ModelParams("hyl", 3, 3 * BETA_STAR, mu=200.0, a=2.0, b=1.0)
    sols = [s for s in mz.hyl_solutions(p) if s.chi]
    assert sols
    prob = mz.HylProblem(p, mz.HylSolverConfig())
    for s in sols:
        assert abs(s.delta_star - prob.g(s.delta_star, s.chi)) <= 1e-9 * s.delta_star
        assert s.density == pytest.approx(s.delta_star, rel=1e-8)
    s = sols[0]
    vec = s.chi_vector(max(s.chi) + 1)
    assert vec[-1] == 0 and all(vec[j - 1] == -1 for j in s.chi)


def test_pmf_density_nondecreasing_then_flat():
    p = ModelParams("pmf", 3, 1.0, a=1.0)
    rho_c = p.weights.rho_c
    mus = np.linspace(-1.0, 2.0 * rho_c, 40)
    ds = [mz.zero(replace(p, mu=m)).delta_star for m in mus]
    assert np.all(np.diff(ds) >= -1e-12)
    assert all(d == rho_c for m, d in zip(mus, ds) if m >= rho_c)


def test_truncated_zero_matches_grid_minimisation():
    p = ModelParams("pmf", 3, 1.0, mu=0.1, a=1.0)
    sol = mz.zero_pmf(p, k_max=3, truncated=True)
    ks = np.arange(1, 4, dtype=np.float64)
    q0 = p.weights.q(ks, 0.0)
    n = 60
    axes = [np.linspace(1e-12, 2 * q0.sum(), n) for _ in range(3)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    ent = np.sum(X * np.log(X / q0) - X + q0, axis=1)
    D = X @ ks
    obj = ent + p.beta * (-p.mu * D + 0.5 * p.a * D * D)
    best = obj.min()
    step = 2 * q0.sum() / (n - 1)
    assert sol.objective <= best + 1e-15
    assert best - sol.objective < 10 * step * step / q0.min()


def test_hyl_branch_sanity_and_residuals():
    p = ModelParams("hyl", 3, 3 * BETA_STAR, mu=200.0, a=2.0, b=1.0)
    prob = mz.HylProblem(p, mz.HylSolverConfig())
    for s in mz.hyl_solutions(p):
        assert np.all(s.xi.values > 0.0)
        assert abs(mz.fixed_point_residual(s)) <= 1e-10
        if s.chi:
            eta = min(float(prob.eta(s.delta_star)), 0.0)
            ks = np.arange(1, 9, dtype=np.float64)
            principal = mdl.lambert_values(p.weights, prob.bbeta, eta, ks)
            for j in s.chi:
                assert s.xi.values[j - 1] > principal[j - 1]


def test_hyl_exponent_continuous_at_threshold():
    # both branches of the case split give a zero exponent at a delta = mu
    p = ModelParams("hyl", 3, BETA_STAR, mu=300.0, a=2.0, b=1.0)
    prob = mz.HylProblem(p, mz.HylSolverConfig())
    d0 = 300.0 / 2.0
    assert float(prob.eta(d0)) == 0.0
    assert abs(float(prob.eta(d0 * (1 - 1e-12)))) < 1e-8
    assert abs(float(prob.eta(d0 * (1 + 1e-12)))) < 1e-8
