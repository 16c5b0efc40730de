#!/usr/bin/env python3
"""Throughput comparison of the numba and numpy kernel backends.

Runs every hot kernel on both implementations across problem sizes and
prints a table with the speedup of numba over numpy. The numba backend
must be importable; run with CKDE_BACKEND unset or set to "numba".

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeats 7]
"""

import argparse
import time

import numpy as np

from ckde import _kernels

if _kernels.ACTIVE_BACKEND != "numba":
    raise SystemExit(
        "numba backend is inactive (CKDE_BACKEND=numpy?); nothing to compare"
    )


def best_of(func, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - t0)
    return best


def benchmark(n, d, repeats, rng):
    diffs = rng.normal(size=(n, 2))
    m = rng.normal(size=(2, 2))
    quad = m @ m.T + np.eye(2)
    weights = rng.random(n)
    prob, alias = _kernels.alias_build_numpy(weights.copy())
    u = rng.random(n)
    v = rng.random(n)
    data = rng.normal(size=(n, d))
    queries = rng.normal(size=(256, d))
    loo_pts = rng.normal(size=(min(n, 2000), d))
    hs = np.array([0.3, 0.6, 1.0])

    cases = [
        ("weight_exponents", lambda f: f(diffs, quad),
         _kernels.weight_exponents_numpy, _kernels.weight_exponents_numba),
        ("alias_build", lambda f: f(weights.copy()),
         _kernels.alias_build_numpy, _kernels.alias_build_numba),
        ("alias_pick", lambda f: f(prob, alias, u, v),
         _kernels.alias_pick_numpy, _kernels.alias_pick_numba),
        (f"loo_scores (N<={min(n, 2000)})", lambda f: f(loo_pts, hs),
         _kernels.loo_scores_numpy, _kernels.loo_scores_numba),
        ("log_density_sums (256 queries)", lambda f: f(queries, data),
         _kernels.log_density_sums_numpy, _kernels.log_density_sums_numba),
    ]
    rows = []
    for name, call, numpy_impl, numba_impl in cases:
        call(numba_impl)  # trigger compilation outside the timed region
        t_np = best_of(lambda: call(numpy_impl), repeats)
        t_nb = best_of(lambda: call(numba_impl), repeats)
        rows.append((name, t_np, t_nb))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1000,10000,100000")
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--dim", type=int, default=4)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)

    print(f"{'kernel':34s} {'N':>8s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for n in sizes:
        for name, t_np, t_nb in benchmark(n, args.dim, args.repeats, rng):
            print(
                f"{name:34s} {n:8d} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms "
                f"{t_np / t_nb:7.1f}x"
            )
        print()


if __name__ == "__main__":
    main()
