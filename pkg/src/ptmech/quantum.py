"""Quantum-noise tier: drift matrix, stability, propagator, phonon budgets.

The first moments of V = (a1, a2, a1+, a2+, q1, q2, p1, p2) obey
dV/dt = M V + F with white noise F.  Everything downstream reduces to the
propagator K(t) = exp(M t):

* stimulated phonons propagate the initial second moments through |K|^2
  weights,
* spontaneous phonons accumulate the noise, split into a cavity-vacuum
  part (n_cm) and a mechanical-bath part (n_mr), via time integrals of
  |K|^2 entries evaluated by adaptive Gauss-Kronrod panels,
* an independent cross-check integrates the full second-moment matrix
  S = <V V+> through dS/dt = M S + S M+ + D with RK4
  (:func:`moments_lyapunov`) and reads the same phonon numbers off S.

Structural facts the |K|^2 formulas rely on are asserted at use: rows 3-4
of K are the complex conjugates of rows 1-2 under the column swap
(1<->3, 2<->4), and the drift spectrum is closed under conjugation.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import Inconsistent, QuadratureFailure, ValidationError
from .model import thermal_occupation  # noqa: F401  (re-export for callers)
from .numerics import eig_complex, expm, kronrod_estimates, kronrod_nodes

QUASI_THRESHOLD_FACTOR = 1e-3  # of kappa; separates QuasiStable from Unstable
ROW_CONJUGATION_TOL = 1e-10
_SWAP = np.array([2, 3, 0, 1, 4, 5, 6, 7])  # a <-> a+ relabeling of V


class Region(enum.Enum):
    STABLE = "stable"
    QUASI_STABLE = "quasi-stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class DriftMatrix:
    m: np.ndarray
    kappa: tuple
    gamma: tuple
    omega: tuple
    j: float
    params_ref: object = None


@dataclass(frozen=True)
class NoiseModel:
    """White-noise strengths: vacuum input per cavity, Brownian force per
    mechanical bath (gamma_i (n_th_i + 1/2))."""

    cavity_strength: tuple
    brownian_strength: tuple

    def __post_init__(self):
        for name in ("cavity_strength", "brownian_strength"):
            vals = getattr(self, name)
            if len(vals) != 2 or any(v < 0 for v in vals):
                raise ValidationError(f"{name} must be two values >= 0")

    @classmethod
    def from_params(cls, params):
        return cls(
            cavity_strength=tuple(params.kappa),
            brownian_strength=tuple(params.gamma[i] * (params.n_th[i] + 0.5)
                                    for i in range(2)),
        )


@dataclass(frozen=True)
class InitialMoments:
    """Diagonal initial second moments: <a+a>, <q^2>, <p^2> per mode."""

    n_cavity: tuple = (0.0, 0.0)
    q_sq: tuple = (0.5, 0.5)
    p_sq: tuple = (0.5, 0.5)

    def __post_init__(self):
        for i in range(2):
            if self.n_cavity[i] < 0:
                raise ValidationError(f"n_cavity[{i}] must be >= 0")
            if self.q_sq[i] < 0.5 - 1e-12 or self.p_sq[i] < 0.5 - 1e-12:
                raise ValidationError("q_sq and p_sq must be >= 1/2 (vacuum)")


@dataclass(frozen=True)
class PhononBreakdown:
    """Phonon numbers per resonator at the sample times ``t``.

    Satisfies n_tt = n_st + n_sp and n_sp = n_cm + n_mr exactly by
    construction.
    """

    t: np.ndarray
    n_st: np.ndarray
    n_sp: np.ndarray
    n_cm: np.ndarray
    n_mr: np.ndarray
    n_tt: np.ndarray


def drift_from_rates(g_eff, delta_eff, omega, kappa, gamma, j, params_ref=None):
    """Drift matrix from explicit rates (g_eff may be complex)."""
    m = np.zeros((8, 8), dtype=complex)
    g = [complex(v) for v in g_eff]
    for i in range(2):
        m[i, i] = -(0.5 * kappa[i] + 1j * delta_eff[i])
        m[i, 4 + i] = 1j * g[i]
        m[2 + i, 2 + i] = -(0.5 * kappa[i] - 1j * delta_eff[i])
        m[2 + i, 4 + i] = -1j * np.conj(g[i])
        m[4 + i, 6 + i] = omega[i]
        m[6 + i, i] = np.conj(g[i])
        m[6 + i, 2 + i] = g[i]
        m[6 + i, 4 + i] = -omega[i]
        m[6 + i, 4 + (1 - i)] = j
        m[6 + i, 6 + i] = -0.5 * gamma[i]
    return DriftMatrix(m=m, kappa=tuple(kappa), gamma=tuple(gamma),
                       omega=tuple(omega), j=float(j), params_ref=params_ref)


def build_drift(wp, params):
    """Drift matrix of the linearized quantum dynamics at a working point."""
    return drift_from_rates(wp.g_eff, wp.delta_eff, params.omega,
                            params.kappa, params.gamma, params.j_coupling,
                            params_ref=wp)


def conjugation_defect(m):
    """Max | conj(M) - S M S | over entries; exactly 0 by construction."""
    swapped = m[np.ix_(_SWAP, _SWAP)]
    return float(np.max(np.abs(np.conj(m) - swapped)))


def stability_spectrum(dm, quasi_threshold=None):
    """(largest real part, region) of the drift spectrum.

    Stable: every eigenvalue decays.  QuasiStable: the leading eigenvalue
    grows slower than ``quasi_threshold`` (default 1e-3 kappa), so runs of
    practical length stay finite.  Unstable otherwise.
    """
    if quasi_threshold is None:
        quasi_threshold = QUASI_THRESHOLD_FACTOR * max(dm.kappa)
    lam, _ = eig_complex(dm.m)
    lam_max = float(np.max(lam.real))
    if lam_max < 0.0:
        region = Region.STABLE
    elif lam_max < quasi_threshold:
        region = Region.QUASI_STABLE
    else:
        region = Region.UNSTABLE
    return lam_max, region


def propagator(dm, t):
    """K(t) = exp(M t) by Pade scaling-and-squaring; K(0) is exactly I."""
    if t < 0:
        raise ValidationError("t must be >= 0")
    if t == 0.0:
        return np.eye(8, dtype=complex)
    return expm(dm.m * float(t))


class _SpectralPropagator:
    """Batched K(t) evaluation through the eigendecomposition of M.

    Falls back to per-time Pade exponentials if the eigenvector matrix is
    ill-conditioned or fails a spot check against the direct exponential.
    """

    def __init__(self, dm, check_time=1.0):
        self.dm = dm
        self.spectral = False
        try:
            w, v = eig_complex(dm.m)
            vinv = np.linalg.inv(v)
            cond = np.linalg.cond(v)
            if np.isfinite(cond) and cond < 1e10:
                self.w, self.v, self.vinv = w, v, vinv
                self.spectral = True
        except Exception:
            self.spectral = False
        if self.spectral:
            ref = expm(dm.m * check_time)
            test = self._eval(np.array([check_time]))[0]
            scale = max(np.max(np.abs(ref)), 1.0)
            if np.max(np.abs(test - ref)) > 1e-9 * scale:
                self.spectral = False

    def _eval(self, times):
        phases = np.exp(np.outer(times, self.w))
        return np.einsum("ik,tk,kj->tij", self.v, phases, self.vinv, optimize=True)

    def __call__(self, times):
        times = np.asarray(times, dtype=float)
        if self.spectral:
            return self._eval(times)
        out = np.empty((times.size, 8, 8), dtype=complex)
        for i, t in enumerate(times):
            out[i] = np.eye(8, dtype=complex) if t == 0.0 else expm(self.dm.m * t)
        return out


def propagator_grid(dm, times):
    """K(t) stacked over an array of times."""
    return _SpectralPropagator(dm)(times)


def _check_row_conjugation(k_grid):
    rows = np.abs(np.conj(k_grid[:, :, _SWAP])[:, _SWAP, :] - k_grid)
    scale = max(1.0, float(np.max(np.abs(k_grid))))
    defect = float(np.max(rows)) / scale
    if defect > ROW_CONJUGATION_TOL:
        raise Inconsistent(
            f"propagator row-conjugation defect {defect:.3e} exceeds "
            f"{ROW_CONJUGATION_TOL:g}; |K|^2 phonon formulas are not valid")


_ROWS = {0: (4, 6), 1: (5, 7)}  # q and p rows of each resonator (0-indexed)


def phonon_stimulated(dm, init, times):
    """Phonons propagated from the initial moments, per resonator.

    Returns an array of shape (len(times), 2); a scalar time gives (2,).
    """
    scalar = np.isscalar(times)
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    k = propagator_grid(dm, ts)
    _check_row_conjugation(k)
    k2 = np.abs(k) ** 2
    out = np.empty((ts.size, 2))
    for r in range(2):
        acc = np.zeros(ts.size)
        for row in _ROWS[r]:
            for i in range(2):
                acc += k2[:, row, i] * (2.0 * init.n_cavity[i] + 1.0)
                acc += k2[:, row, 4 + i] * init.q_sq[i]
                acc += k2[:, row, 6 + i] * init.p_sq[i]
        out[:, r] = 0.5 * acc - 0.5
    return out[0] if scalar else out


def _cumulative_k2_integrals(dm, ts, quad_tol, max_panels=200_000):
    """Cumulative integrals of |K|^2 over the noise columns.

    Returns an array indexed by (time, row in 4..7, source column pair)
    where the last axis holds the four relevant columns (a1+, a2+, p1, p2).
    Panels finer than a quarter of the fastest beat period are refined by
    bisection until the Gauss-Kronrod error estimate of every component
    drops below ``quad_tol`` relative to its running magnitude.
    """
    cols = np.array([2, 3, 6, 7])
    prop = _SpectralPropagator(dm)
    lam, _ = eig_complex(dm.m)
    f_max = 2.0 * float(np.max(np.abs(lam.imag))) + 1e-12
    h_max = 0.25 * 2.0 * math.pi / f_max

    boundaries = [0.0]
    for t in ts:
        lo = boundaries[-1]
        if t <= lo:
            continue
        n = max(1, int(math.ceil((t - lo) / h_max)))
        boundaries.extend(lo + (t - lo) * np.arange(1, n + 1) / n)
    boundaries = np.array(boundaries)

    def integrand(nodes):
        k = prop(nodes)
        _check_row_conjugation(k)
        return np.abs(k[:, 4:8][:, :, cols]) ** 2

    panels = [(boundaries[i], boundaries[i + 1]) for i in range(len(boundaries) - 1)]
    values = {}
    budget = max_panels
    running = np.zeros((4, 4))
    while panels:
        if budget <= 0:
            raise QuadratureFailure("panel budget exhausted before reaching "
                                    f"quad_tol={quad_tol:g}")
        batch, panels = panels[:512], panels[512:]
        budget -= len(batch)
        nodes = np.concatenate([kronrod_nodes(a, b) for a, b in batch])
        f = integrand(nodes)
        for idx, (a, b) in enumerate(batch):
            est, err = kronrod_estimates(f[15 * idx:15 * (idx + 1)], a, b)
            scale = np.abs(est) + running + 1e-30
            if np.all(err <= quad_tol * scale) or (b - a) < 1e-13 * boundaries[-1]:
                key = round(float(a), 15)
                values.setdefault(key, []).append((a, b, est))
                running += np.maximum(est, 0.0)
            else:
                mid = 0.5 * (a + b)
                panels.append((a, mid))
                panels.append((mid, b))

    # accumulate panel integrals in time order, then read off the ts grid
    flat = sorted((a, b, est) for chunks in values.values() for a, b, est in chunks)
    out = np.zeros((ts.size, 4, 4))
    acc = np.zeros((4, 4))
    pos = 0
    for a, b, est in flat:
        while pos < ts.size and ts[pos] <= a + 1e-15:
            out[pos] = acc
            pos += 1
        acc = acc + est
        end = b
        while pos < ts.size and abs(ts[pos] - end) <= 1e-12 * max(1.0, end):
            out[pos] = acc
            pos += 1
    while pos < ts.size:
        out[pos] = acc
        pos += 1
    return out


def phonon_spontaneous(dm, noise, times, quad_tol=1e-8):
    """Noise-accumulated phonons and their source split, per resonator.

    Returns (n_sp, n_cm, n_mr), each shaped (len(times), 2) (or (2,) for a
    scalar time).  n_cm collects the cavity vacuum noise, n_mr the
    mechanical Brownian force; n_sp is their sum and is non-decreasing in
    time because the integrands are nonnegative.
    """
    scalar = np.isscalar(times)
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(ts < 0):
        raise ValidationError("times must be >= 0")
    order = np.argsort(ts)
    cum = _cumulative_k2_integrals(dm, ts[order], quad_tol)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    cum = cum[inv]

    n_cm = np.empty((ts.size, 2))
    n_mr = np.empty((ts.size, 2))
    for r in range(2):
        rows = [row - 4 for row in _ROWS[r]]
        cav = sum(noise.cavity_strength[i] * cum[:, row, i]
                  for row in rows for i in range(2))
        mech = sum(noise.brownian_strength[i] * cum[:, row, 2 + i]
                   for row in rows for i in range(2))
        n_cm[:, r] = 0.5 * cav
        n_mr[:, r] = 0.5 * mech
    n_sp = n_cm + n_mr
    if scalar:
        return n_sp[0], n_cm[0], n_mr[0]
    return n_sp, n_cm, n_mr


def phonon_total(dm, init, noise, times, quad_tol=1e-8):
    """Stimulated + spontaneous breakdown with the additivity invariant."""
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    n_st = phonon_stimulated(dm, init, ts)
    n_sp, n_cm, n_mr = phonon_spontaneous(dm, noise, ts, quad_tol)
    return PhononBreakdown(t=ts, n_st=n_st, n_sp=n_sp, n_cm=n_cm, n_mr=n_mr,
                           n_tt=n_st + n_sp)


def initial_covariance(init):
    """Second-moment matrix <V V+> for diagonal initial moments.

    Off-diagonal entries follow from the commutators alone: <a a+> on the
    cavity diagonal carries the +1, and <q p> = i/2 = -<p q>* within each
    resonator.
    """
    s = np.zeros((8, 8), dtype=complex)
    for i in range(2):
        s[i, i] = init.n_cavity[i] + 1.0
        s[2 + i, 2 + i] = init.n_cavity[i]
        s[4 + i, 4 + i] = init.q_sq[i]
        s[6 + i, 6 + i] = init.p_sq[i]
        s[4 + i, 6 + i] = 0.5j
        s[6 + i, 4 + i] = -0.5j
    return s


def diffusion_matrix(noise):
    """Diagonal diffusion of d<VV+>/dt: (k1, k2, 0, 0, 0, 0, gB1, gB2)."""
    d = np.zeros((8, 8), dtype=complex)
    d[0, 0] = noise.cavity_strength[0]
    d[1, 1] = noise.cavity_strength[1]
    d[6, 6] = noise.brownian_strength[0]
    d[7, 7] = noise.brownian_strength[1]
    return d


def moments_lyapunov(dm, noise, init_cov, times, dt=None):
    """Integrate dS/dt = M S + S M+ + D and sample S at ``times``.

    Fixed-step RK4 with a step resolving the fastest internal frequency
    (default 2*pi / (2500 * f_max)); the independent oracle for the
    propagator/quadrature pipeline.  Returns the stack of second-moment
    matrices at the requested times (scalar time gives a single matrix).
    """
    scalar = np.isscalar(times)
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(ts < 0) or np.any(np.diff(ts) < 0):
        raise ValidationError("times must be >= 0 and sorted")
    if dt is None:
        lam, _ = eig_complex(dm.m)
        f_max = max(2.0 * float(np.max(np.abs(lam.imag))), 1.0)
        dt = 2.0 * math.pi / (2500.0 * f_max)
    m = np.ascontiguousarray(dm.m)
    mh = np.ascontiguousarray(np.conj(dm.m.T))
    d = np.ascontiguousarray(diffusion_matrix(noise))
    s = np.ascontiguousarray(np.asarray(init_cov, dtype=complex))
    out = np.empty((ts.size, 8, 8), dtype=complex)
    t_now = 0.0
    for k, t in enumerate(ts):
        span = t - t_now
        if span > 0:
            n = max(1, int(math.ceil(span / dt)))
            s = kernels.rk4_moments(m, mh, d, s, span / n, n)
            t_now = t
        out[k] = s
    return out[0] if scalar else out


def phonons_from_moments(s):
    """Total phonons per resonator read off a second-moment matrix."""
    s = np.asarray(s)
    if s.ndim == 2:
        s = s[None]
    n1 = 0.5 * (s[:, 4, 4].real + s[:, 6, 6].real - 1.0)
    n2 = 0.5 * (s[:, 5, 5].real + s[:, 7, 7].real - 1.0)
    out = np.stack([n1, n2], axis=1)
    return out[0] if out.shape[0] == 1 else out
