"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N] [--steps M]``.
Each kernel is timed on both backends with identical inputs; outputs are
checked for agreement before the timings are reported.
"""

import argparse
import time

import numpy as np

from boseldp import kernels
from boseldp.model import ModelParams
from boseldp.sim import reference_rates


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def _mh_case(steps, seed=0):
    p = ModelParams("pmf", 3, 1.0, mu=0.05, a=0.5)
    k_max, volume = 5, 1000.0
    rng = np.random.default_rng(seed)
    log_rate = np.log(reference_rates(p, volume, k_max))
    start = rng.poisson(np.exp(log_rate)).astype(np.int64)
    coord = rng.integers(0, k_max, size=steps, dtype=np.int64)
    up = rng.integers(0, 2, size=steps, dtype=np.uint8)
    logu = np.log(rng.random(steps))
    args = (2, p.beta, p.mu_eff, p.a, p.b, volume)

    def run(mod):
        counts = start.copy()
        s1, s2 = np.zeros(k_max), np.zeros(k_max)
        acc = mod.mh_block(counts, log_rate, coord, up, logu, *args, s1, s2)
        return acc, counts, s1

    return run


def cases(steps):
    xs = np.linspace(-0.3678, 50.0, 20_000)
    mh = _mh_case(steps)
    return {
        "lambert_w_array (20k points)": lambda m: m.lambert_w_array(xs, 0),
        "bose_series (n=1.5, alpha=1e-3)": lambda m: m.bose_series(1.5, 1e-3, 1e-17, 10**7),
        "power_exp_sum (1e6 terms)": lambda m: m.power_exp_sum(2.5, 1e-4, 1, 10**6),
        f"mh_block ({steps} steps)": mh,
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=0.0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--steps", type=int, default=200_000)
    args = ap.parse_args(argv)
    mods = kernels.backends()
    if "compiled" not in mods:
        print("compiled extension not built; only the Python backend is available")
    print(f"{'kernel':36s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, fn in cases(args.steps).items():
        t_py, out_py = _best(lambda: fn(mods["python"]), args.repeat)
        if "compiled" in mods:
            t_c, out_c = _best(lambda: fn(mods["compiled"]), args.repeat)
            flag = "" if _same(out_py, out_c) else "  MISMATCH"
            print(f"{name:36s} {t_py:11.4f} {t_c:13.4f} {t_py / t_c:8.1f}{flag}")
        else:
            print(f"{name:36s} {t_py:11.4f} {'-':>13s} {'-':>8s}")


if __name__ == "__main__":
    main()
