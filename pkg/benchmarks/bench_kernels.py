#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times each elementwise kernel on flat buffers at a few sizes, then runs one
full solve per backend on a synthetic instance to show the end-to-end
difference. The dense mode products go through BLAS either way, so the
end-to-end gap is bounded by the elementwise share of the iteration.

Usage: python benchmarks/bench_kernels.py [--repeats 20] [--sizes 216000,2000000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from strtd import kernels, scenarios, solver
from strtd.tensor import reconstruct


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(sizes, repeats):
    if kernels.compiled_backend is None:
        print("compiled kernels unavailable; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'size':>10}{'numpy':>12}{'compiled':>12}{'speedup':>9}")
    for size in sizes:
        a = rng.standard_normal(size)
        b = rng.standard_normal(size)
        c = rng.standard_normal(size)
        mask = rng.random(size) < 0.7
        cases = {
            "soft_threshold": lambda k: k.soft_threshold(a, 0.3),
            "shrink_step": lambda k: k.shrink_step(a, b, 0.01, 0.3),
            "clamp_step": lambda k: k.clamp_step(a, b, 0.01),
            "extrapolate": lambda k: k.extrapolate(a, b, 0.4),
            "feedback_combine": lambda k: k.feedback_combine(a, b, c, mask, 0.2),
            "masked_sq_diff": lambda k: k.masked_sq_diff(a, b, mask),
            "masked_sq_sum": lambda k: k.masked_sq_sum(a, mask),
        }
        for name, call in cases.items():
            t_np = best_of(lambda: call(kernels.numpy_backend), repeats)
            t_c = best_of(lambda: call(kernels.compiled_backend), repeats)
            print(f"{name:<18}{size:>10}{t_np*1e3:>10.3f}ms{t_c*1e3:>10.3f}ms{t_np/t_c:>8.2f}x")


def bench_solve():
    rng = np.random.default_rng(3)
    dims = (40, 48, 7)
    core = np.where(rng.random(dims) < 0.1, rng.random(dims) * 10, 0.0)
    factors = []
    for d in dims:
        u = rng.random((d, d))
        u /= np.linalg.norm(u, axis=0)
        factors.append(u)
    truth = reconstruct(core, factors)
    mask = scenarios.mask_rm(dims, 0.3, seed=1)
    x_in = np.where(mask.observed, truth, 0.0)
    cfg = solver.SolverConfig(seed=0, max_iters=100, tol=1e-12)

    results = {}
    times = {}
    backends = ["numpy"] + (["compiled"] if kernels.compiled_backend else [])
    original = kernels.backend_name()
    try:
        for nm in backends:
            kernels.set_backend(nm)
            start = time.perf_counter()
            xhat, state = solver.solve(x_in, mask, None, cfg)
            times[nm] = time.perf_counter() - start
            results[nm] = (xhat, state.objective_trace[-1])
    finally:
        kernels.set_backend(original)

    print(f"\nfull solve, dims {dims}, {cfg.max_iters} iterations:")
    for nm in backends:
        print(f"  {nm:<9}{times[nm]:.3f}s  final objective {results[nm][1]:.6f}")
    if len(backends) == 2:
        same = np.allclose(results["numpy"][0], results["compiled"][0], rtol=1e-10)
        print(f"  speedup {times['numpy'] / times['compiled']:.2f}x, outputs match: {same}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--sizes", default="216000,2000000")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"active backend at import: {kernels.backend_name()}\n")
    bench_kernels(sizes, args.repeats)
    bench_solve()


if __name__ == "__main__":
    main()
