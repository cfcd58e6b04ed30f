"""The jitted kernels and their pure-Python/numpy fallbacks must agree
bitwise; both are fixed-step RK4 evaluated in the same order."""

import numpy as np
import pytest

from ptmech import kernels

pytestmark = pytest.mark.skipif(not kernels.NUMBA_ENABLED,
                                reason="numba disabled; fallback is the only path")

FULL_ARGS = dict(k1=1.0, k2=1.0, d1=-10.0, d2=10.0, g1=1e-4, g2=1e-4,
                 w1=10.0, w2=10.0, gm1=1e-5, gm2=1e-5, jc=0.01,
                 om1=5000.0, om2=5000.0)


def test_full_kernel_fallback_bitwise():
    y0 = np.zeros(8)
    args = (y0, *FULL_ARGS.values(), 1e-3, 4000, 10, 1e12)
    out_jit, n_jit, s_jit = kernels.rk4_full(*args)
    out_py, n_py, s_py = kernels.plain(kernels.rk4_full)(*args)
    assert (n_jit, s_jit) == (n_py, s_py)
    assert np.array_equal(out_jit[:n_jit], out_py[:n_py])


def test_reduced_kernel_fallback_bitwise():
    y0 = np.array([1.0, 0.0, 0.5, -0.2])
    args = (y0, 10.0, 10.0, 10.0, 0.01, 0.005, -0.005, 1e-3, 5000, 7, 1e12)
    out_jit, n_jit, s_jit = kernels.rk4_reduced(*args)
    out_py, n_py, s_py = kernels.plain(kernels.rk4_reduced)(*args)
    assert (n_jit, s_jit) == (n_py, s_py)
    assert np.array_equal(out_jit[:n_jit], out_py[:n_py])


def test_moments_kernel_fallback_bitwise():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    m = np.ascontiguousarray(m)
    mh = np.ascontiguousarray(np.conj(m.T))
    d = np.ascontiguousarray(np.diag(rng.uniform(size=8)).astype(complex))
    s0 = np.ascontiguousarray(np.eye(8, dtype=complex))
    out_jit = kernels.rk4_moments(m, mh, d, s0, 1e-4, 300)
    out_py = kernels.plain(kernels.rk4_moments)(m, mh, d, s0, 1e-4, 300)
    assert np.array_equal(out_jit, out_py)


def test_determinism():
    y0 = np.zeros(8)
    args = (y0, *FULL_ARGS.values(), 1e-3, 2000, 5, 1e12)
    first = kernels.rk4_full(*args)[0]
    second = kernels.rk4_full(*args)[0]
    assert np.array_equal(first, second)


def test_divergence_status():
    y0 = np.array([100.0, 0.0, 200.0, 0.0])
    out, n, status = kernels.rk4_reduced(y0, 10.0, 10.0, 10.0, 0.01,
                                         0.5, 0.5, 1e-2, 20000, 10, 1e6)
    assert status == kernels.STATUS_DIVERGED
    assert n < 2001
