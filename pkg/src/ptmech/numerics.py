"""Shared numerical kernels: ODE integration, eigendecomposition, matrix
exponential, root solving, and adaptive quadrature.

Everything here is deterministic for identical inputs.  The dense linear
algebra is delegated to LAPACK through numpy/scipy (Hessenberg + shifted QR
for the eigenproblem, Pade scaling-and-squaring for the exponential); the
wrappers add the residual checks the rest of the package relies on.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    Diverged,
    NoConvergence,
    QuadratureFailure,
    StepTooLarge,
    ValidationError,
)


@dataclass(frozen=True)
class Tolerances:
    """Central numerical tolerances (all dimensionless)."""

    ode_rel: float = 1e-9
    ode_abs: float = 1e-12
    eig_residual: float = 1e-10
    expm_tol: float = 1e-9
    quad_rel: float = 1e-8
    root_residual: float = 1e-10

    def __post_init__(self):
        for name in ("ode_rel", "ode_abs", "eig_residual", "expm_tol",
                     "quad_rel", "root_residual"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0")


DEFAULT_TOL = Tolerances()

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def integrate_ode(f, y0, t_span, dt=None, method="rk4", rtol=None, atol=None,
                  guard=1e12, max_steps=50_000_000):
    """Integrate ``y' = f(t, y)`` over ``t_span = (t0, t1)``.

    Parameters
    ----------
    f : callable(t, y) -> array
    y0 : array_like
    dt : float, required for the fixed-step "rk4" method.
    method : "rk4" (fixed step) or "dopri54" (adaptive, embedded 5(4) pair).
    rtol, atol : adaptive tolerances; default from :data:`DEFAULT_TOL`.
    guard : overflow guard; exceeding it raises :class:`Diverged`.

    Returns
    -------
    (t, y) : sample times and states, one row per accepted step.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.atleast_1d(np.asarray(y0, dtype=float if not np.iscomplexobj(y0) else complex)).copy()
    if method == "rk4":
        if dt is None or dt <= 0:
            raise ValidationError("rk4 integration requires dt > 0")
        n = int(round((t1 - t0) / dt))
        ts = np.empty(n + 1)
        ys = np.empty((n + 1,) + y.shape, dtype=y.dtype)
        ts[0] = t0
        ys[0] = y
        t = t0
        for k in range(1, n + 1):
            k1 = np.asarray(f(t, y))
            k2 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k1))
            k3 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k2))
            k4 = np.asarray(f(t + dt, y + dt * k3))
            y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t0 + k * dt
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > guard:
                raise Diverged(f"state exceeded guard {guard:g} at t={t:g}")
            ts[k] = t
            ys[k] = y
        return ts, ys
    if method != "dopri54":
        raise ValidationError(f"unknown integration method {method!r}")

    rtol = DEFAULT_TOL.ode_rel if rtol is None else rtol
    atol = DEFAULT_TOL.ode_abs if atol is None else atol
    ts = [t0]
    ys = [y.copy()]
    t = t0
    h = dt if dt else (t1 - t0) / 100.0
    h_min = (t1 - t0) * 1e-14
    k_stages = np.empty((7,) + y.shape, dtype=y.dtype)
    steps = 0
    while t < t1:
        if steps > max_steps:
            raise NoConvergence("dopri54 exceeded the step budget")
        h = min(h, t1 - t)
        k_stages[0] = f(t, y)
        for s in range(1, 7):
            acc = y + h * np.tensordot(_DP_A[s], k_stages[:s], axes=(0, 0))
            k_stages[s] = f(t + _DP_C[s] * h, acc)
        y5 = y + h * np.tensordot(_DP_B5, k_stages, axes=(0, 0))
        y4 = y + h * np.tensordot(_DP_B4, k_stages, axes=(0, 0))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = np.sqrt(np.mean(np.abs((y5 - y4) / scale) ** 2))
        if err <= 1.0:
            t = t + h
            y = y5
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > guard:
                raise Diverged(f"state exceeded guard {guard:g} at t={t:g}")
            ts.append(t)
            ys.append(y.copy())
        factor = 0.9 * err ** -0.2 if err > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))
        if h < h_min:
            raise StepTooLarge(f"step collapsed below {h_min:g} at t={t:g}")
        steps += 1
    return np.array(ts), np.array(ys)


def eig_complex(m, tol=None):
    """Dense complex eigendecomposition with a residual check.

    Returns ``(w, v)`` with right eigenvectors in the columns of ``v`` and
    residual ``||m v_i - w_i v_i|| / ||m||_F < tol`` for every pair.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("eig_complex expects a square matrix")
    if not np.all(np.isfinite(m)):
        raise ValidationError("eig_complex expects finite entries")
    tol = DEFAULT_TOL.eig_residual if tol is None else tol
    try:
        w, v = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(f"eigendecomposition failed: {exc}") from exc
    scale = np.linalg.norm(m)
    if scale == 0.0:
        return w, v
    res = np.linalg.norm(m @ v - v * w[None, :], axis=0) / scale
    if np.max(res) > tol:
        raise NoConvergence(f"eigenpair residual {np.max(res):.3e} above {tol:g}")
    return w, v


def expm(m):
    """Matrix exponential by Pade scaling-and-squaring."""
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValidationError("expm expects finite entries")
    return scipy.linalg.expm(m)


def root_solve(f, x0, jacobian=None, tol=None, max_iter=100):
    """Damped Newton iteration for ``f(x) = 0``.

    The Jacobian is approximated by forward differences when not supplied.
    Raises :class:`NoConvergence` if ``max(|f|) < tol`` is not reached.
    """
    tol = DEFAULT_TOL.root_residual if tol is None else tol
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    for _ in range(max_iter):
        fx = np.atleast_1d(np.asarray(f(x), dtype=float))
        if np.max(np.abs(fx)) < tol:
            return x
        if jacobian is not None:
            jac = np.atleast_2d(np.asarray(jacobian(x), dtype=float))
        else:
            jac = np.empty((fx.size, x.size))
            for k in range(x.size):
                step = 1e-7 * max(1.0, abs(x[k]))
                xp = x.copy()
                xp[k] += step
                jac[:, k] = (np.atleast_1d(f(xp)) - fx) / step
        try:
            dx = np.linalg.solve(jac, -fx)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Jacobian at x={x}") from exc
        lam = 1.0
        base = np.max(np.abs(fx))
        while lam > 1e-8:
            trial = x + lam * dx
            ft = np.atleast_1d(np.asarray(f(trial), dtype=float))
            if np.all(np.isfinite(ft)) and np.max(np.abs(ft)) < base:
                x = trial
                break
            lam *= 0.5
        else:
            raise NoConvergence("Newton line search stalled")
    fx = np.atleast_1d(np.asarray(f(x), dtype=float))
    if np.max(np.abs(fx)) < tol:
        return x
    raise NoConvergence(f"residual {np.max(np.abs(fx)):.3e} above {tol:g} "
                        f"after {max_iter} iterations")


def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def quad_adaptive(f, a, b, rel_tol=None, max_evals=500_000, min_depth=6):
    """Adaptive Simpson quadrature of a scalar function on [a, b].

    Subdivision is forced down to ``min_depth`` levels before the error
    estimate may accept a panel, which defeats aliasing on periodic
    integrands whose period divides the interval.
    """
    rel_tol = DEFAULT_TOL.quad_rel if rel_tol is None else rel_tol
    a = float(a)
    b = float(b)
    if b == a:
        return 0.0
    fa, fb = f(a), f(b)
    m, fm, whole = _simpson(f, a, fa, b, fb)
    evals = [3]

    def recurse(a, fa, b, fb, m, fm, whole, depth):
        lm, flm, left = _simpson(f, a, fa, m, fm)
        rm, frm, right = _simpson(f, m, fm, b, fb)
        evals[0] += 2
        if evals[0] > max_evals:
            raise QuadratureFailure(f"evaluation cap {max_evals} exceeded")
        delta = left + right - whole
        converged = abs(delta) <= 15.0 * rel_tol * (abs(left + right) + 1e-300)
        if depth >= min_depth and converged:
            return left + right + delta / 15.0
        if depth > 48:
            raise QuadratureFailure("subdivision depth exceeded")
        return (recurse(a, fa, m, fm, lm, flm, left, depth + 1)
                + recurse(m, fm, b, fb, rm, frm, right, depth + 1))

    return recurse(a, fa, b, fb, m, fm, whole, 0)


# Gauss-Kronrod 15-point pair (QUADPACK constants): 15 evaluations give the
# K15 estimate plus an embedded 7-point Gauss estimate for the error.
_XGK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG7 = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])
_G7_IDX = np.arange(1, 15, 2)


def kronrod_nodes(a, b):
    """Kronrod-15 abscissae on [a, b]."""
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * _XGK


def kronrod_estimates(fvals, a, b):
    """(K15, |K15 - G7|) for samples taken at :func:`kronrod_nodes`.

    ``fvals`` may be vector valued with the node axis first.
    """
    half = 0.5 * (b - a)
    k15 = half * np.tensordot(_WGK, fvals, axes=(0, 0))
    g7 = half * np.tensordot(_WG7, fvals[_G7_IDX], axes=(0, 0))
    return k15, np.abs(k15 - g7)
