"""Parameters, weights, cycle-count sequences and rate functions."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boseldp import model as mdl, specfun
from boseldp.errors import DomainError
from boseldp.model import CycleCounts, IdealTail, LambertTail, Model, ModelParams, ZERO_TAIL


@pytest.mark.parametrize("kwargs", [
    dict(model="ideal", d=0, beta=1.0),
    dict(model="ideal", d=3, beta=0.0),
    dict(model="ideal", d=3, beta=1.0, alpha=0.1),
    dict(model="ideal", d=3, beta=1.0, mu=0.2, alpha=-0.1),
    dict(model="cmf", d=3, beta=1.0, mu=0.1, a=1.0),
    dict(model="pmf", d=3, beta=1.0, a=0.0),
    dict(model="hyl", d=3, beta=1.0, a=1.0, b=1.0),
    dict(model="pmf", d=3, beta=math.inf, a=1.0),
    dict(model="pmf", d=3, beta=1.0, a=-1.0),
])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(DomainError):
        ModelParams(**kwargs)


def test_reduction_folds_alpha_into_mu():
    p = ModelParams("pmf", 3, 1.0, mu=0.5, alpha=-0.2, a=1.0)
    r = p.reduced()
    assert r.alpha == 0.0 and r.mu == pytest.approx(0.3)
    assert p.as_dict()["mu_eff"] == p.mu_eff


def test_weights_at_beta_norm_are_power_laws(beta_norm):
    w = ModelParams("ideal", 3, beta_norm).weights
    ks = np.arange(1, 11, dtype=np.float64)
    np.testing.assert_allclose(w.q(ks), ks ** -2.5, rtol=1e-14)
    assert w.rho_c == pytest.approx(specfun.zeta(1.5), rel=1e-14)


@pytest.mark.parametrize("d", [1, 2])
def test_critical_density_infinite_in_low_dimension(d):
    assert math.isinf(ModelParams("ideal", d, 1.0).weights.rho_c)


@pytest.mark.parametrize("d,eta", [(3, 0.0), (3, -0.3), (2, -0.01), (1, -0.5), (4, 0.0)])
def test_ideal_tail_sums_match_brute_force(d, eta):
    w = mdl.Weights(d, 0.7)
    tail = IdealTail(w, eta, 0.8)
    start = 12
    ks = np.arange(start + 1, start + 2_000_001, dtype=np.float64)
    v = tail.values(ks)
    s = tail.sums(start)
    # brute force misses a tail of order N^(1 - d/2) when eta = 0
    rtol = 1e-3 if eta == 0.0 else 1e-12
    assert s.mass == pytest.approx(math.fsum(v), rel=rtol)
    if eta != 0.0 or d >= 5:
        assert s.density == pytest.approx(math.fsum(ks * v), rel=rtol)
    assert s.square == pytest.approx(math.fsum((ks * v) ** 2), rel=1e-6)


@pytest.mark.parametrize("d,beta,b,eta", [(3, 1.0, 1.0, 0.0), (3, 0.004, 1.0, -0.02),
                                          (2, 1.5, 2.5, -1e-3), (2, 1.0, 1.0, -0.2),
                                          (1, 1.0, 0.5, -0.3), (4, 0.5, 1.0, 0.0)])
def test_lambert_tail_sums_match_brute_force(d, beta, b, eta):
    w = mdl.Weights(d, beta)
    bb = b * beta
    tail = LambertTail(w, eta, bb)
    start = 3
    N = 3_000_000
    ks = np.arange(start + 1, N + 1, dtype=np.float64)
    v = tail.values(ks)
    assert np.all(np.isfinite(v))
    s = tail.sums(start)
    brute = math.fsum(ks * v)
    # the brute-force sum is truncated; require agreement to its tail size
    miss = IdealTail(w, eta, 1.0).sums(N).density * 1.5
    assert abs(s.density - brute) <= miss + 1e-12 * abs(brute)
    assert s.mass == pytest.approx(math.fsum(v), rel=1e-6, abs=1e-15)


def test_lambert_values_branch_choice():
    w = mdl.Weights(3, 1.0)
    ks = np.array([1.0, 2.0])
    lo = mdl.lambert_values(w, 1.0, -0.1, ks, {1: -1})
    hi = mdl.lambert_values(w, 1.0, -0.1, ks)
    assert lo[0] > hi[0] and lo[1] == hi[1]


def test_cycle_counts_tail_completion():
    w = mdl.Weights(3, 1.0)
    x = CycleCounts(w.q(np.arange(1, 6, dtype=np.float64), -0.1), IdealTail(w, -0.1))
    assert x.density() == pytest.approx(w.rho(-0.1), rel=1e-14)
    assert x.mass() == pytest.approx(w.qbar(-0.1), rel=1e-14)
    full = x.full(8)
    assert full[-1] == pytest.approx(float(w.q(8.0, -0.1)), rel=1e-14)


@given(st.lists(st.floats(min_value=0.0, max_value=2.0), min_size=1, max_size=6),
       st.floats(min_value=-2.0, max_value=0.0))
def test_ideal_rate_nonnegative_and_zero_at_weights(xs, mu):
    p = ModelParams("ideal", 3, 1.0, mu=mu)
    x = CycleCounts(np.array(xs), ZERO_TAIL)
    assert mdl.rate_ideal(p, x) >= -1e-12
    ks = np.arange(1, 9, dtype=np.float64)
    zero = CycleCounts(p.weights.q(ks, mu), IdealTail(p.weights, mu))
    assert abs(mdl.rate_ideal(p, zero)) < 1e-12


def test_negative_entry_has_infinite_rate():
    p = ModelParams("ideal", 3, 1.0, mu=-0.1)
    assert mdl.rate_ideal(p, CycleCounts(np.array([-1e-3, 0.1]))) == math.inf


@given(st.floats(min_value=0.0, max_value=3.0), st.floats(min_value=-1.0, max_value=2.0),
       st.floats(min_value=0.1, max_value=3.0))
def test_pmf_lsc_hamiltonian_below_raw(scale, mu, a):
    p = ModelParams("pmf", 3, 1.0, mu=mu, a=a)
    x = CycleCounts(scale * np.array([0.3, 0.1, 0.05]))
    h, h_lsc = mdl.hamiltonian(p, x), mdl.hamiltonian_lsc(p, x)
    assert h_lsc <= h + 1e-12
    assert h_lsc >= -max(mu, 0.0) ** 2 / (2 * a) - 1e-12


@given(st.floats(min_value=0.0, max_value=3.0), st.floats(min_value=-1.0, max_value=2.0))
def test_hyl_lsc_hamiltonian_continuous_across_threshold(scale, mu):
    p = ModelParams("hyl", 3, 1.0, mu=mu, a=2.0, b=1.0)
    base = np.array([0.3, 0.1, 0.05])
    dens = float(np.arange(1, 4) @ base)
    if mu <= 0:
        return
    t = mu / p.a / dens
    below = CycleCounts(base * t * (1 - 1e-9))
    above = CycleCounts(base * t * (1 + 1e-9))
    assert mdl.hamiltonian_lsc(p, below) == pytest.approx(mdl.hamiltonian_lsc(p, above), abs=1e-7)


def test_cumulant_density_finite_on_boundary():
    for d in (1, 2, 3):
        p = ModelParams("ideal", d, 1.0, alpha=-0.3)
        t_edge = 0.3 * p.beta
        # the boundary series is sum q_k^(0) - qbar^(alpha), finite for d >= 1
        value = mdl.cumulant_density(p, t_edge)
        assert value == pytest.approx(p.weights.qbar(0.0) - p.weights.qbar(-0.3), rel=1e-12)
        assert mdl.cumulant_density(p, t_edge + 1e-9) == math.inf


def test_cumulant_seq_matches_direct_sum():
    p = ModelParams("ideal", 3, 1.0, mu=-0.2)
    t = np.array([0.1, -0.3, 0.5])
    q = p.weights.q(np.arange(1, 4, dtype=np.float64), -0.2)
    assert mdl.cumulant_seq(p, t) == pytest.approx(float(np.sum(q * np.expm1(t))), rel=1e-15)


def test_cumulant_examples():
    p = ModelParams("ideal", 3, 1.0, mu=-0.4)
    assert mdl.cumulant_seq(p, [0.0, 0.0]) == 0.0
    assert mdl.cumulant_seq(p, [math.log(2.0)]) == pytest.approx(float(p.weights.q(1.0, -0.4)),
                                                                  rel=1e-15)
    r = ModelParams("ideal", 3, 1.0, alpha=-1.0)
    assert mdl.cumulant_density(r, 0.0) == 0.0
    ks = np.arange(1, 200, dtype=np.float64)
    direct = math.fsum(r.weights.q(ks, -1.0) * np.expm1(ks))
    direct += math.fsum(r.weights.q(np.arange(200, 2_000_000, dtype=np.float64), 0.0))
    assert mdl.cumulant_density(r, 1.0) == pytest.approx(direct, rel=1e-6)


def test_cumulant_density_convex():
    p = ModelParams("ideal", 3, 1.3, alpha=-0.4)
    ts = np.linspace(-3.0, 0.4 * 1.3, 81)
    vals = np.array([mdl.cumulant_density(p, t) for t in ts])
    assert np.all(np.diff(vals, 2) >= -1e-9)


def test_ideal_rate_positive_off_zero():
    p = ModelParams("ideal", 3, 1.0, mu=-0.2)
    ks = np.arange(1, 7, dtype=np.float64)
    q = p.weights.q(ks, -0.2)
    rng = np.random.default_rng(17)
    for _ in range(100):
        h = rng.normal(scale=0.3, size=6) * q
        x = CycleCounts(np.maximum(q + h, 0.0), IdealTail(p.weights, -0.2))
        assert mdl.rate_ideal(p, x) > 0.0


def test_legendre_link_single_coordinate():
    p = ModelParams("ideal", 3, 1.0, mu=-0.3)
    q1 = float(p.weights.q(1.0, -0.3))
    x = 2.5 * q1
    ts = np.linspace(-5.0, 5.0, 200_001)
    sup = max(t * x - mdl.cumulant_seq(p, [t]) for t in ts[::50])
    sup = max(sup, float(np.max(ts * x - q1 * np.expm1(ts))))
    # the rate restricted to the first coordinate
    exact = x * math.log(x / q1) - x + q1
    assert sup == pytest.approx(exact, abs=1e-8)


def test_lsc_equal_to_raw_above_threshold_and_flat_below():
    p = ModelParams("pmf", 3, 1.0, mu=0.6, a=2.0)
    above = CycleCounts(np.array([0.4, 0.1]))      # D = 0.6 >= mu/a
    assert mdl.hamiltonian_lsc(p, above) == mdl.hamiltonian(p, above)
    for scale in (0.0, 0.1, 0.25):
        below = CycleCounts(scale * np.array([0.4, 0.1]))
        assert mdl.hamiltonian_lsc(p, below) == -0.6 ** 2 / 4.0
    h = ModelParams("hyl", 3, 1.0, mu=0.6, a=2.0, b=1.0)
    assert mdl.hamiltonian_lsc(h, above) == pytest.approx(mdl.hamiltonian(h, above), rel=1e-15)


@pytest.mark.parametrize("scale", [0.05, 0.2, 1.0])
def test_hyl_lsc_tends_to_pmf_linearly_in_b(scale):
    x = CycleCounts(scale * np.array([0.3, 0.1, 0.05]))
    pmf = mdl.hamiltonian_lsc(ModelParams("pmf", 3, 1.0, mu=0.5, a=1.0), x)
    errs = [abs(mdl.hamiltonian_lsc(ModelParams("hyl", 3, 1.0, mu=0.5, a=1.0, b=b), x) - pmf)
            for b in (1e-3, 1e-6)]
    assert errs[0] < 1e-2 and errs[1] < 1e-5
    assert errs[1] / errs[0] == pytest.approx(1e-3, rel=1e-2)
