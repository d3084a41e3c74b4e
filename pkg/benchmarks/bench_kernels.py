#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the law dynamic program (1-d and 2-d) and path building on both
backends and prints a small table.  Run from the repository root:

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from urnlab.colors import ssrw_model, triangular_model
from urnlab.kernels import _fallback

try:
    from urnlab.kernels import _core
except ImportError:
    _core = None


def time_call(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_dp_1d(impl, n):
    model = ssrw_model(1)
    law = np.array([1.0])
    return impl.dp_advance_1d(law, 0, 1, n, model.coeff_array[:, 0].copy(),
                              model.prob_array, 1e-10 / (2 * n), 1e-10, 0.0, 1 << 24)


def bench_dp_2d(impl, n):
    model = triangular_model()
    law = np.array([[1.0]])
    return impl.dp_advance_2d(law, 0, 0, 1, n, model.coeff_array,
                              model.prob_array, 1e-10 / (2 * n), 1e-10, 0.0, 1 << 24)


def bench_paths(impl, reps, n):
    rng = np.random.default_rng(0)
    K = rng.integers(0, 10**9, (reps, n)).astype(np.int64) % (np.arange(n) + 1)
    xoff = rng.integers(-1, 2, (reps, n, 2)).astype(np.int64)
    z0 = np.zeros((reps, n, 2), dtype=np.int64)
    return lambda: impl.build_paths(K, xoff, z0)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller sizes")
    args = parser.parse_args()

    n_1d = 10**5 if args.quick else 10**6
    n_2d = 10**4 if args.quick else 10**5
    reps, n_path = (50, 10**4) if args.quick else (200, 10**5)

    cases = [
        (f"law dp 1-d (n={n_1d})", lambda impl: time_call(bench_dp_1d, impl, n_1d)[0]),
        (f"law dp 2-d (n={n_2d})", lambda impl: time_call(bench_dp_2d, impl, n_2d)[0]),
        (f"paths ({reps}x{n_path})",
         lambda impl: time_call(bench_paths(impl, reps, n_path))[0]),
    ]

    backends = [("numpy", _fallback)]
    if _core is not None:
        backends.insert(0, ("cython", _core))
    else:
        print("compiled backend unavailable; timing the fallback only")

    header = f"{'kernel':<26}" + "".join(f"{name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, runner in cases:
        times = [runner(impl) for _, impl in backends]
        row = f"{label:<26}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>9.1f}x"
        print(row)

    # cross-check: identical results where both backends exist
    if _core is not None:
        a = bench_dp_1d(_core, 2000)
        b = bench_dp_1d(_fallback, 2000)
        assert np.array_equal(a[0], b[0]) and a[1] == b[1]
        print("backend outputs identical: yes")


if __name__ == "__main__":
    main()
