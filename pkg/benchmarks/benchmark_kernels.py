"""Compare the JIT-compiled integration kernels against the pure-Python path.

Usage:
    python benchmarks/benchmark_kernels.py [--steps N] [--moment-steps N]

The same source implements both paths: with numba installed the module
attribute is a compiled dispatcher and ``.py_func`` is the original
function; with PTMECH_NO_NUMBA=1 the attribute is already the plain
function and both columns coincide.
"""

import argparse
import time

import numpy as np

from ptmech import kernels

FULL_ARGS = dict(k1=1.0, k2=1.0, d1=-10.0, d2=10.0, g1=1e-4, g2=1e-4,
                 w1=10.0, w2=10.0, gm1=1e-5, gm2=1e-5, jc=0.01,
                 om1=5000.0, om2=5000.0)


def time_call(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_trajectory(steps):
    y0 = np.zeros(8)
    args = (y0, *FULL_ARGS.values(), 2 * np.pi / 1000.0, steps, 64, 1e12)
    kernels.rk4_full(*args)  # warm the JIT cache
    jit_t, jit_out = time_call(kernels.rk4_full, *args)
    py_t, py_out = time_call(kernels.plain(kernels.rk4_full), *args, repeat=1)
    assert np.array_equal(jit_out[0][:jit_out[1]], py_out[0][:py_out[1]]), \
        "paths disagree"
    return jit_t, py_t


def bench_moments(steps):
    rng = np.random.default_rng(0)
    m = np.ascontiguousarray(rng.normal(size=(8, 8)) * 0.1
                             + 1j * rng.normal(size=(8, 8)))
    mh = np.ascontiguousarray(np.conj(m.T))
    d = np.ascontiguousarray(np.diag(rng.uniform(size=8)).astype(complex))
    s0 = np.ascontiguousarray(np.eye(8, dtype=complex))
    args = (m, mh, d, s0, 1e-4, steps)
    kernels.rk4_moments(*args)
    jit_t, jit_out = time_call(kernels.rk4_moments, *args)
    py_t, py_out = time_call(kernels.plain(kernels.rk4_moments), *args, repeat=1)
    assert np.array_equal(jit_out, py_out), "paths disagree"
    return jit_t, py_t


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200_000,
                        help="RK4 steps for the trajectory kernel")
    parser.add_argument("--moment-steps", type=int, default=20_000,
                        help="RK4 steps for the 8x8 moment kernel")
    args = parser.parse_args()

    print(f"numba enabled: {kernels.NUMBA_ENABLED}")
    rows = [
        ("rk4_full", args.steps) + bench_trajectory(args.steps),
        ("rk4_moments", args.moment_steps) + bench_moments(args.moment_steps),
    ]
    print(f"{'kernel':<14}{'steps':>10}{'jit [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for name, steps, jit_t, py_t in rows:
        speedup = py_t / jit_t if jit_t > 0 else float("nan")
        print(f"{name:<14}{steps:>10}{jit_t:>12.4f}{py_t:>12.4f}{speedup:>10.1f}")


if __name__ == "__main__":
    main()
