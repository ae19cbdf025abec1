"""Time the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--n 100]

Reports the median wall time of theta_grad, one full FBS solve and one full
MM solve on an example-1 trial, per backend, and the speed-up.
"""

import argparse
import statistics
import time

import numpy as np

from bisr import _backend
from bisr.bivariate import BivariatePenalty
from bisr.convexity import certified_params
from bisr.experiments import PRESETS, ExperimentSpec, lambda_rule, make_trial
from bisr.solver import Objective, SolverConfig, solve


def median_time(fn, repeat):
    fn()  # warm-up (numba compiles on first call)
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=100)
    args = ap.parse_args(argv)

    h = PRESETS["example1_like"]
    spec = ExperimentSpec(n=args.n, n_impulses=max(1, args.n // 10))
    _, y = make_trial(spec, h, 4.0, 0)
    lam = lambda_rule(h, 4.0)
    params = certified_params(h, lam)
    obj = Objective(h, y, lam, BivariatePenalty("atan", params))
    x = np.random.default_rng(0).normal(0, 10, obj.N)

    rows = []
    for name in ("numpy", "numba"):
        k = _backend.get(name)
        tg = median_time(lambda: k.theta_grad(x, params.a1, params.a2, 2), args.repeat)
        tf = median_time(lambda: solve(obj, SolverConfig(backend=name, stop_rel_tol=1e-6)),
                         args.repeat)
        tm = median_time(lambda: solve(obj, SolverConfig(algorithm="mm", backend=name,
                                                         stop_rel_tol=1e-6)), args.repeat)
        rows.append((name, tg, tf, tm))

    print(f"N = {obj.N}, median of {args.repeat} runs")
    print(f"{'backend':<8} {'theta_grad':>12} {'FBS solve':>12} {'MM solve':>12}")
    for name, tg, tf, tm in rows:
        print(f"{name:<8} {tg * 1e6:>10.1f}us {tf * 1e3:>10.2f}ms {tm * 1e3:>10.2f}ms")
    (_, g0, f0, m0), (_, g1, f1, m1) = rows
    print(f"{'speed-up':<8} {g0 / g1:>11.1f}x {f0 / f1:>11.1f}x {m0 / m1:>11.1f}x")


if __name__ == "__main__":
    main()
