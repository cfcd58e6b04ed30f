"""Semiclassical trajectories of the coupled optomechanical pair.

Three tiers share one fixed-step RK4 backend (see :mod:`ptmech.kernels`):

* full      -- the nonlinear equations with the intensity force
               ``g |a|^2`` and the detuning modulation ``g q``; this tier
               saturates instead of growing without bound,
* linearized -- fluctuations around a :class:`~ptmech.model.WorkingPoint`,
* reduced    -- the four mechanical quadratures after the cavities are
               eliminated, optionally with frequency-shift and intrinsic
               damping corrections; with both corrections zero the dynamics
               is exactly invariant under (swap subsystems, t -> -t,
               p -> -p).

The default step is 2*pi/(100*omega_m), one hundred samples per mechanical
period.  Trajectories that pass the overflow guard of 1e12 raise
:class:`~ptmech.errors.Diverged` loudly rather than emitting Inf.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import Diverged, InsufficientPeaks, StepTooLarge, ValidationError

OVERFLOW_GUARD = 1e12

FULL_COLUMNS = ("re_a1", "im_a1", "re_a2", "im_a2", "q1", "p1", "q2", "p2", "I1", "I2")
REDUCED_COLUMNS = ("q1", "p1", "q2", "p2")


@dataclass(frozen=True)
class ClassicalState:
    """Cavity amplitudes plus mechanical quadratures (c-number state)."""

    a: tuple = (0j, 0j)
    q: tuple = (0.0, 0.0)
    p: tuple = (0.0, 0.0)

    def vector(self):
        a = [complex(x) for x in self.a]
        return np.array([a[0].real, a[0].imag, a[1].real, a[1].imag,
                         self.q[0], self.p[0], self.q[1], self.p[1]])


@dataclass(frozen=True)
class ReducedState:
    q: tuple = (0.0, 0.0)
    p: tuple = (0.0, 0.0)

    def vector(self):
        return np.array([self.q[0], self.p[0], self.q[1], self.p[1]], dtype=float)


@dataclass
class TimeSeries:
    """Sampled trajectory: times, one row per sample, and metadata."""

    t: np.ndarray
    rows: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.t) != len(self.rows):
            raise ValidationError("t and rows must have equal length")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValidationError("t must be strictly increasing")
        columns = self.meta.get("columns")
        if columns is not None and self.rows.shape[1] != len(columns):
            raise ValidationError(
                f"row width {self.rows.shape[1]} does not match the "
                f"{len(columns)} declared columns")

    @property
    def columns(self):
        return self.meta["columns"]

    def channel(self, name):
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise ValidationError(f"unknown channel {name!r}; have {self.columns}")
        return self.rows[:, idx]

    def window(self, t_lo, t_hi):
        mask = (self.t >= t_lo) & (self.t <= t_hi)
        return TimeSeries(self.t[mask], self.rows[mask], dict(self.meta))


def params_hash(*parts):
    blob = json.dumps([repr(p) for p in parts], sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def default_dt(omega_m):
    return 2.0 * math.pi / (100.0 * omega_m)


def _grid(t_max, dt, fastest, stride):
    if t_max <= 0:
        raise ValidationError("t_max must be > 0")
    if dt is None:
        dt = default_dt(fastest)
    if dt <= 0:
        raise ValidationError("dt must be > 0")
    if dt > 2.0 * math.pi / (50.0 * fastest):
        raise StepTooLarge(
            f"dt={dt:g} does not resolve the fastest oscillation "
            f"(need <= {2.0 * math.pi / (50.0 * fastest):g})")
    n_steps = max(1, int(math.ceil(t_max / dt)))
    if stride is None:
        stride = max(1, n_steps // 400_000)
    return dt, n_steps, int(stride)


def _finish(raw, filled, status, dt, stride, columns, meta, transform=None):
    if status == kernels.STATUS_DIVERGED:
        t_fail = filled * dt * stride
        raise Diverged(f"trajectory exceeded {OVERFLOW_GUARD:g} near t={t_fail:g}")
    rows = raw[:filled]
    if transform is not None:
        rows = transform(rows)
    t = dt * stride * np.arange(filled)
    meta = dict(meta)
    meta["columns"] = list(columns)
    return TimeSeries(t, rows, meta)


def _with_intensities(rows8):
    out = np.empty((rows8.shape[0], 10))
    out[:, :8] = rows8
    out[:, 8] = rows8[:, 0] ** 2 + rows8[:, 1] ** 2
    out[:, 9] = rows8[:, 2] ** 2 + rows8[:, 3] ** 2
    return out


def _adaptive_series(rhs, y0, t_max, columns, meta, rtol, transform=None):
    from .numerics import integrate_ode

    t, y = integrate_ode(rhs, y0, (0.0, t_max), method="dopri54",
                         rtol=rtol, atol=1e-12 if rtol is None else rtol * 1e-3,
                         guard=OVERFLOW_GUARD)
    if transform is not None:
        y = transform(y)
    meta = dict(meta)
    meta["columns"] = list(columns)
    return TimeSeries(t, y, meta)


def integrate_full(params, init, t_max, dt=None, stride=None, method="rk4",
                   rtol=None):
    """Integrate the full nonlinear tier from a :class:`ClassicalState`.

    ``method="dopri54"`` switches to the adaptive embedded pair (useful for
    validating long runs; much slower than the compiled fixed-step path).
    """
    fastest = max(max(params.omega), max(abs(d) for d in params.delta))
    meta = {"tier": "full", "params_hash": params_hash(params, init, t_max, dt)}
    if method == "dopri54":
        k1, k2 = params.kappa
        d1, d2 = params.delta
        g1, g2 = params.g
        w1, w2 = params.omega
        gm1, gm2 = params.gamma
        jc, om1, om2 = params.j_coupling, params.drive[0], params.drive[1]

        def rhs(t, y):
            dy = np.empty(8)
            kernels.plain(kernels._rhs_full)(
                y, dy, k1, k2, d1, d2, g1, g2, w1, w2, gm1, gm2, jc, om1, om2)
            return dy

        return _adaptive_series(rhs, init.vector(), t_max, FULL_COLUMNS,
                                meta, rtol, transform=_with_intensities)
    dt, n_steps, stride = _grid(t_max, dt, fastest, stride)
    raw, filled, status = kernels.rk4_full(
        init.vector(),
        params.kappa[0], params.kappa[1], params.delta[0], params.delta[1],
        params.g[0], params.g[1], params.omega[0], params.omega[1],
        params.gamma[0], params.gamma[1], params.j_coupling,
        params.drive[0], params.drive[1], dt, n_steps, stride, OVERFLOW_GUARD)
    return _finish(raw, filled, status, dt, stride, FULL_COLUMNS, meta,
                   transform=_with_intensities)


def integrate_linearized(wp, params, init, t_max, dt=None, stride=None):
    """Integrate the fluctuation dynamics around a working point."""
    fastest = max(max(params.omega), max(abs(d) for d in wp.delta_eff))
    dt, n_steps, stride = _grid(t_max, dt, fastest, stride)
    g1, g2 = complex(wp.g_eff[0]), complex(wp.g_eff[1])
    raw, filled, status = kernels.rk4_linearized(
        init.vector(),
        params.kappa[0], params.kappa[1], wp.delta_eff[0], wp.delta_eff[1],
        g1.real, g1.imag, g2.real, g2.imag,
        params.omega[0], params.omega[1], params.gamma[0], params.gamma[1],
        params.j_coupling, dt, n_steps, stride, OVERFLOW_GUARD)
    meta = {"tier": "linearized", "params_hash": params_hash(params, wp, init, t_max, dt)}
    return _finish(raw, filled, status, dt, stride, FULL_COLUMNS, meta,
                   transform=_with_intensities)


def integrate_reduced(gamma_eff, omega_m, j, init, t_max, shift=(0.0, 0.0),
                      gamma_intrinsic=(0.0, 0.0), dt=None, stride=None,
                      method="rk4", rtol=None):
    """Integrate the four-quadrature reduced tier.

    ``gamma_eff`` enters as gain +gamma_eff/2 on p1 and damping
    -gamma_eff/2 on p2; ``shift`` raises omega on side 1 and lowers it on
    side 2; ``gamma_intrinsic`` subtracts from the gain and adds to the
    damping.  ``shift`` and ``gamma_intrinsic`` accept a scalar 0 as
    shorthand for (0, 0).
    """
    if np.isscalar(shift):
        shift = (float(shift), float(shift))
    if np.isscalar(gamma_intrinsic):
        gamma_intrinsic = (float(gamma_intrinsic), float(gamma_intrinsic))
    c1 = 0.5 * (gamma_eff - gamma_intrinsic[0])
    c2 = -0.5 * (gamma_eff + gamma_intrinsic[1])
    meta = {"tier": "reduced",
            "params_hash": params_hash(gamma_eff, omega_m, j, shift,
                                       gamma_intrinsic, init, t_max, dt)}
    if method == "dopri54":
        wq1, wq2 = omega_m + shift[0], omega_m - shift[1]

        def rhs(t, y):
            dy = np.empty(4)
            kernels.plain(kernels._rhs_reduced)(y, dy, omega_m, wq1, wq2, j, c1, c2)
            return dy

        return _adaptive_series(rhs, init.vector(), t_max, REDUCED_COLUMNS,
                                meta, rtol)
    dt, n_steps, stride = _grid(t_max, dt, omega_m, stride)
    raw, filled, status = kernels.rk4_reduced(
        init.vector(), omega_m, omega_m + shift[0], omega_m - shift[1],
        j, c1, c2, dt, n_steps, stride, OVERFLOW_GUARD)
    return _finish(raw, filled, status, dt, stride, REDUCED_COLUMNS, meta)


def linearized_generator(wp, params):
    """8x8 real generator of the linearized tier over the kernel layout.

    Assembled coefficient-by-coefficient from the fluctuation equations;
    kept independent of the complex drift matrix in :mod:`ptmech.quantum`
    so the two constructions can be compared spectrally.
    """
    m = np.zeros((8, 8))
    for i in range(2):
        x, v = 2 * i, 2 * i + 1
        q, p = 4 + 2 * i, 5 + 2 * i
        gr, gi = complex(wp.g_eff[i]).real, complex(wp.g_eff[i]).imag
        m[x, x] = -0.5 * params.kappa[i]
        m[x, v] = wp.delta_eff[i]
        m[x, q] = -gi
        m[v, v] = -0.5 * params.kappa[i]
        m[v, x] = -wp.delta_eff[i]
        m[v, q] = gr
        m[q, p] = params.omega[i]
        m[p, q] = -params.omega[i]
        m[p, 4 + 2 * (1 - i)] = params.j_coupling
        m[p, x] = 2.0 * gr
        m[p, v] = 2.0 * gi
        m[p, p] = -0.5 * params.gamma[i]
    return m


def peak_envelope(t, v, detrend=True):
    """Interpolated local maxima of |v| after removing the window mean.

    Returns (peak times, peak heights).  Peaks are refined by fitting a
    parabola through the three samples around each discrete maximum.
    """
    v = np.asarray(v, dtype=float)
    if detrend:
        v = v - v.mean()
    av = np.abs(v)
    core = av[1:-1]
    mask = (core >= av[:-2]) & (core > av[2:]) & (core > 0)
    idx = np.nonzero(mask)[0] + 1
    if idx.size == 0:
        return np.empty(0), np.empty(0)
    y0, y1, y2 = av[idx - 1], av[idx], av[idx + 1]
    denom = y0 - 2.0 * y1 + y2
    shift = np.where(np.abs(denom) > 0, 0.5 * (y0 - y2) / np.where(denom == 0, 1.0, denom), 0.0)
    shift = np.clip(shift, -1.0, 1.0)
    heights = y1 - 0.25 * (y0 - y2) * shift
    times = t[idx] + shift * (t[idx + 1] - t[idx])
    return times, heights


def fit_envelope_rate(series, channel, window):
    """Least-squares slope of log peak amplitudes; positive means growth.

    ``channel`` may be a column name or index; ``window`` is a (t_lo, t_hi)
    pair that should enclose at least ten oscillation periods.  Raises
    :class:`InsufficientPeaks` if fewer than five usable peaks are found.
    """
    t_lo, t_hi = window
    spacing = series.t[1] - series.t[0] if len(series.t) > 1 else 0.0
    if t_lo < series.t[0] - spacing or t_hi > series.t[-1] + spacing:
        raise ValidationError("window must lie inside the series")
    if isinstance(channel, str):
        values = series.channel(channel)
    else:
        values = series.rows[:, int(channel)]
    mask = (series.t >= t_lo) & (series.t <= t_hi)
    times, heights = peak_envelope(series.t[mask], values[mask])
    keep = heights > 0
    times, heights = times[keep], heights[keep]
    if times.size < 5:
        raise InsufficientPeaks(f"found {times.size} peaks in window {window}")
    coeffs = np.polyfit(times, np.log(heights), 1)
    return float(coeffs[0])
