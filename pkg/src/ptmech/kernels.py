"""Hot integration loops, JIT-compiled with numba when available.

Set the environment variable ``PTMECH_NO_NUMBA=1`` to force the pure-numpy
fallback (same functions, un-jitted).  When numba is active the original
Python implementations remain reachable through ``<kernel>.py_func``, which
is what ``benchmarks/benchmark_kernels.py`` uses to compare both paths.

State layouts (float64 unless noted):
  full / linearized tier: [re_a1, im_a1, re_a2, im_a2, q1, p1, q2, p2]
  reduced tier:           [q1, p1, q2, p2]
  moment tier:            8x8 complex128 second-moment matrix

All loops are fixed-step classical RK4 and bitwise deterministic.
"""

import os

import numpy as np

_disabled = os.environ.get("PTMECH_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


STATUS_OK = 0
STATUS_DIVERGED = 1


def plain(kernel):
    """Return the un-jitted Python version of a kernel (itself if no JIT)."""
    return getattr(kernel, "py_func", kernel)


@njit(cache=True)
def _rhs_full(y, dy, k1, k2, d1, d2, g1, g2, w1, w2, gm1, gm2, jc, om1, om2):
    x1 = y[0]
    v1 = y[1]
    x2 = y[2]
    v2 = y[3]
    q1 = y[4]
    p1 = y[5]
    q2 = y[6]
    p2 = y[7]
    e1 = d1 - g1 * q1  # instantaneous cavity detuning
    e2 = d2 - g2 * q2
    dy[0] = -0.5 * k1 * x1 + e1 * v1
    dy[1] = -0.5 * k1 * v1 - e1 * x1 - om1
    dy[2] = -0.5 * k2 * x2 + e2 * v2
    dy[3] = -0.5 * k2 * v2 - e2 * x2 - om2
    dy[4] = w1 * p1
    dy[5] = -w1 * q1 + jc * q2 + g1 * (x1 * x1 + v1 * v1) - 0.5 * gm1 * p1
    dy[6] = w2 * p2
    dy[7] = -w2 * q2 + jc * q1 + g2 * (x2 * x2 + v2 * v2) - 0.5 * gm2 * p2


@njit(cache=True)
def rk4_full(y0, k1, k2, d1, d2, g1, g2, w1, w2, gm1, gm2, jc, om1, om2,
             dt, n_steps, stride, guard):
    n_out = n_steps // stride + 1
    out = np.empty((n_out, 8))
    y = y0.copy()
    ka = np.empty(8)
    kb = np.empty(8)
    kc = np.empty(8)
    kd = np.empty(8)
    tmp = np.empty(8)
    out[0] = y
    filled = 1
    for step in range(1, n_steps + 1):
        _rhs_full(y, ka, k1, k2, d1, d2, g1, g2, w1, w2, gm1, gm2, jc, om1, om2)
        for i in range(8):
            tmp[i] = y[i] + 0.5 * dt * ka[i]
        _rhs_full(tmp, kb, k1, k2, d1, d2, g1, g2, w1, w2, gm1, gm2, jc, om1, om2)
        for i in range(8):
            tmp[i] = y[i] + 0.5 * dt * kb[i]
        _rhs_full(tmp, kc, k1, k2, d1, d2, g1, g2, w1, w2, gm1, gm2, jc, om1, om2)
        for i in range(8):
            tmp[i] = y[i] + dt * kc[i]
        _rhs_full(tmp, kd, k1, k2, d1, d2, g1, g2, w1, w2, gm1, gm2, jc, om1, om2)
        for i in range(8):
            y[i] += dt / 6.0 * (ka[i] + 2.0 * kb[i] + 2.0 * kc[i] + kd[i])
        if step % stride == 0:
            peak = 0.0
            for i in range(8):
                a = abs(y[i])
                if a > peak:
                    peak = a
            if peak > guard or peak != peak:
                return out, filled, STATUS_DIVERGED
            out[filled] = y
            filled += 1
    return out, filled, STATUS_OK


@njit(cache=True)
def _rhs_linearized(y, dy, k1, k2, d1, d2, gr1, gi1, gr2, gi2,
                    w1, w2, gm1, gm2, jc):
    x1 = y[0]
    v1 = y[1]
    x2 = y[2]
    v2 = y[3]
    q1 = y[4]
    p1 = y[5]
    q2 = y[6]
    p2 = y[7]
    dy[0] = -0.5 * k1 * x1 + d1 * v1 - gi1 * q1
    dy[1] = -0.5 * k1 * v1 - d1 * x1 + gr1 * q1
    dy[2] = -0.5 * k2 * x2 + d2 * v2 - gi2 * q2
    dy[3] = -0.5 * k2 * v2 - d2 * x2 + gr2 * q2
    dy[4] = w1 * p1
    dy[5] = -w1 * q1 + jc * q2 + 2.0 * (gr1 * x1 + gi1 * v1) - 0.5 * gm1 * p1
    dy[6] = w2 * p2
    dy[7] = -w2 * q2 + jc * q1 + 2.0 * (gr2 * x2 + gi2 * v2) - 0.5 * gm2 * p2


@njit(cache=True)
def rk4_linearized(y0, k1, k2, d1, d2, gr1, gi1, gr2, gi2, w1, w2, gm1, gm2,
                   jc, dt, n_steps, stride, guard):
    n_out = n_steps // stride + 1
    out = np.empty((n_out, 8))
    y = y0.copy()
    ka = np.empty(8)
    kb = np.empty(8)
    kc = np.empty(8)
    kd = np.empty(8)
    tmp = np.empty(8)
    out[0] = y
    filled = 1
    for step in range(1, n_steps + 1):
        _rhs_linearized(y, ka, k1, k2, d1, d2, gr1, gi1, gr2, gi2, w1, w2, gm1, gm2, jc)
        for i in range(8):
            tmp[i] = y[i] + 0.5 * dt * ka[i]
        _rhs_linearized(tmp, kb, k1, k2, d1, d2, gr1, gi1, gr2, gi2, w1, w2, gm1, gm2, jc)
        for i in range(8):
            tmp[i] = y[i] + 0.5 * dt * kb[i]
        _rhs_linearized(tmp, kc, k1, k2, d1, d2, gr1, gi1, gr2, gi2, w1, w2, gm1, gm2, jc)
        for i in range(8):
            tmp[i] = y[i] + dt * kc[i]
        _rhs_linearized(tmp, kd, k1, k2, d1, d2, gr1, gi1, gr2, gi2, w1, w2, gm1, gm2, jc)
        for i in range(8):
            y[i] += dt / 6.0 * (ka[i] + 2.0 * kb[i] + 2.0 * kc[i] + kd[i])
        if step % stride == 0:
            peak = 0.0
            for i in range(8):
                a = abs(y[i])
                if a > peak:
                    peak = a
            if peak > guard or peak != peak:
                return out, filled, STATUS_DIVERGED
            out[filled] = y
            filled += 1
    return out, filled, STATUS_OK


@njit(cache=True)
def _rhs_reduced(y, dy, om, wq1, wq2, jc, c1, c2):
    # wq1/wq2 carry the frequency shifts; c1/c2 are the signed p coefficients
    dy[0] = om * y[1]
    dy[1] = -wq1 * y[0] + jc * y[2] + c1 * y[1]
    dy[2] = om * y[3]
    dy[3] = jc * y[0] - wq2 * y[2] + c2 * y[3]


@njit(cache=True)
def rk4_reduced(y0, om, wq1, wq2, jc, c1, c2, dt, n_steps, stride, guard):
    n_out = n_steps // stride + 1
    out = np.empty((n_out, 4))
    y = y0.copy()
    ka = np.empty(4)
    kb = np.empty(4)
    kc = np.empty(4)
    kd = np.empty(4)
    tmp = np.empty(4)
    out[0] = y
    filled = 1
    for step in range(1, n_steps + 1):
        _rhs_reduced(y, ka, om, wq1, wq2, jc, c1, c2)
        for i in range(4):
            tmp[i] = y[i] + 0.5 * dt * ka[i]
        _rhs_reduced(tmp, kb, om, wq1, wq2, jc, c1, c2)
        for i in range(4):
            tmp[i] = y[i] + 0.5 * dt * kb[i]
        _rhs_reduced(tmp, kc, om, wq1, wq2, jc, c1, c2)
        for i in range(4):
            tmp[i] = y[i] + dt * kc[i]
        _rhs_reduced(tmp, kd, om, wq1, wq2, jc, c1, c2)
        for i in range(4):
            y[i] += dt / 6.0 * (ka[i] + 2.0 * kb[i] + 2.0 * kc[i] + kd[i])
        if step % stride == 0:
            peak = 0.0
            for i in range(4):
                a = abs(y[i])
                if a > peak:
                    peak = a
            if peak > guard or peak != peak:
                return out, filled, STATUS_DIVERGED
            out[filled] = y
            filled += 1
    return out, filled, STATUS_OK


@njit(cache=True)
def _lyap_rhs(m, mh, d, s, out):
    # out = m @ s + s @ mh + d, written out to avoid temporaries
    for i in range(8):
        for j in range(8):
            acc = d[i, j]
            for k in range(8):
                acc += m[i, k] * s[k, j] + s[i, k] * mh[k, j]
            out[i, j] = acc


@njit(cache=True)
def rk4_moments(m, mh, d, s0, dt, n_steps):
    """Advance the second-moment matrix by n_steps and return the endpoint."""
    s = s0.copy()
    ka = np.empty((8, 8), dtype=np.complex128)
    kb = np.empty((8, 8), dtype=np.complex128)
    kc = np.empty((8, 8), dtype=np.complex128)
    kd = np.empty((8, 8), dtype=np.complex128)
    tmp = np.empty((8, 8), dtype=np.complex128)
    for _ in range(n_steps):
        _lyap_rhs(m, mh, d, s, ka)
        for i in range(8):
            for j in range(8):
                tmp[i, j] = s[i, j] + 0.5 * dt * ka[i, j]
        _lyap_rhs(m, mh, d, tmp, kb)
        for i in range(8):
            for j in range(8):
                tmp[i, j] = s[i, j] + 0.5 * dt * kb[i, j]
        _lyap_rhs(m, mh, d, tmp, kc)
        for i in range(8):
            for j in range(8):
                tmp[i, j] = s[i, j] + dt * kc[i, j]
        _lyap_rhs(m, mh, d, tmp, kd)
        for i in range(8):
            for j in range(8):
                s[i, j] += dt / 6.0 * (ka[i, j] + 2.0 * kb[i, j] + 2.0 * kc[i, j] + kd[i, j])
    return s
