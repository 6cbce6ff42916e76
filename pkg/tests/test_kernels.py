"""Compiled and pure-Python kernels agree; the fallback is selectable."""

import os
import subprocess
import sys

import numpy as np
import pytest

from boseldp import kernels
from boseldp.model import ModelParams
from boseldp import sim

BACKENDS = kernels.backends()
needs_compiled = pytest.mark.skipif("compiled" not in BACKENDS,
                                    reason="compiled extension not built")


def test_active_backend_is_named():
    assert kernels.BACKEND in ("compiled", "python")
    assert kernels.BACKEND in BACKENDS


def test_environment_variable_forces_python():
    env = dict(os.environ, BOSELDP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import boseldp; print(boseldp.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
@pytest.mark.parametrize("branch", [0, -1])
def test_lambert_w_backends_agree(branch):
    xs = np.concatenate([np.linspace(-0.36787944117144233, -1e-6, 300),
                         np.linspace(0.0, 50.0, 300)])
    if branch == -1:
        xs = xs[(xs < 0)]
    py = BACKENDS["python"].lambert_w_array(xs, branch)
    cy = BACKENDS["compiled"].lambert_w_array(xs, branch)
    np.testing.assert_allclose(cy, py, rtol=4e-16, atol=0)


@needs_compiled
@pytest.mark.parametrize("n,alpha", [(1.5, 0.5), (2.5, 0.01), (-0.5, 1.0), (3.0, 800.0)])
def test_bose_series_backends_agree(n, alpha):
    py = BACKENDS["python"].bose_series(n, alpha, 1e-14, 10_000_000)
    cy = BACKENDS["compiled"].bose_series(n, alpha, 1e-14, 10_000_000)
    assert cy[2] == py[2]
    assert cy[0] == pytest.approx(py[0], rel=1e-14, abs=0)


@needs_compiled
@pytest.mark.parametrize("model,a,b,mu", [("cmf", 1.0, 0.0, -0.1), ("pmf", 1.0, 0.0, 0.2),
                                          ("hyl", 2.0, 1.0, 0.3)])
def test_mh_trajectories_identical(model, a, b, mu):
    params = ModelParams(model, 3, 1.0, mu=mu, a=a, b=b)
    cfg = sim.SimConfig(params, 50.0, 4, 20_000, burn_in=1000, seed=5)
    py = sim.sample_tilted(cfg, backend="python")
    cy = sim.sample_tilted(cfg, backend="compiled")
    assert py.acceptance_rate == cy.acceptance_rate
    assert np.array_equal(py.mean, cy.mean)
    assert np.array_equal(py.stderr, cy.stderr)


def test_unknown_backend_rejected():
    params = ModelParams("pmf", 3, 1.0, mu=0.1, a=1.0)
    with pytest.raises(ValueError):
        sim.sample_tilted(sim.SimConfig(params, 10.0, 2, 10), backend="fortran")


def test_benchmark_script_runs(capsys):
    import importlib.util
    import pathlib
    path = pathlib.Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    mod.main(["--repeat", "1", "--steps", "2000"])
    out = capsys.readouterr().out
    assert "mh_block" in out and "MISMATCH" not in out
