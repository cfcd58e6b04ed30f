"""Physical parameters, driven steady state, and derived rates.

All rates are expressed in units of the first cavity linewidth, so a
canonical parameter set has ``kappa = (1, 1)``.  The steady state of the
driven system solves

    [kappa_i/2 + i(delta_i - g_i xi_i)] alpha_i = -i drive_i
    omega_1 xi_1 - J xi_2 = g_1 |alpha_1|^2
    omega_2 xi_2 - J xi_1 = g_2 |alpha_2|^2

for the cavity amplitudes ``alpha_i`` and static displacements ``xi_i``.
From the solution follow the effective detunings, the drive-enhanced
couplings ``G_i = g_i alpha_i``, the radiation-pressure frequency shift,
and the optomechanical gain/damping rate.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.constants

from .errors import BistableWarning, DomainError, NoConvergence, ValidationError

STEADY_STATE_RESIDUAL = 1e-10


def _pair(value, name):
    if np.isscalar(value):
        value = (value, value)
    value = tuple(float(x) for x in value)
    if len(value) != 2:
        raise ValidationError(f"{name} must have exactly 2 entries")
    return value


@dataclass(frozen=True)
class PhysicalParams:
    """Raw system constants, normalized to kappa[0].

    kappa, gamma, omega, g, delta, drive are per-subsystem pairs; ``delta``
    is the bare laser detuning (cavity minus drive frequency), ``drive`` the
    real nonnegative driving strength, ``j_coupling`` the mechanical
    coupling, and ``n_th`` the thermal phonon occupation of each bath.
    """

    kappa: tuple = (1.0, 1.0)
    gamma: tuple = (0.0, 0.0)
    omega: tuple = (10.0, 10.0)
    g: tuple = (0.0, 0.0)
    delta: tuple = (0.0, 0.0)
    drive: tuple = (0.0, 0.0)
    j_coupling: float = 0.0
    n_th: tuple = (0.0, 0.0)

    def __post_init__(self):
        for name in ("kappa", "gamma", "omega", "g", "delta", "drive", "n_th"):
            object.__setattr__(self, name, _pair(getattr(self, name), name))
        object.__setattr__(self, "j_coupling", float(self.j_coupling))
        for i in range(2):
            if not self.kappa[i] > 0:
                raise ValidationError(f"kappa[{i}] must be > 0")
            if not self.omega[i] > 0:
                raise ValidationError(f"omega[{i}] must be > 0")
            if self.gamma[i] < 0:
                raise ValidationError(f"gamma[{i}] must be >= 0")
            if self.drive[i] < 0:
                raise ValidationError(f"drive[{i}] must be >= 0")
            if self.n_th[i] < 0:
                raise ValidationError(f"n_th[{i}] must be >= 0")
        if self.j_coupling < 0:
            raise ValidationError("j_coupling must be >= 0")
        if self.j_coupling >= min(self.omega):
            raise ValidationError("j_coupling must be < min(omega)")

    def swapped(self):
        """Parameters with the two subsystems exchanged."""
        def sw(p):
            return (p[1], p[0])
        return replace(self, kappa=sw(self.kappa), gamma=sw(self.gamma),
                       omega=sw(self.omega), g=sw(self.g), delta=sw(self.delta),
                       drive=sw(self.drive), n_th=sw(self.n_th))


def canonical_params(drive=5000.0, j_coupling=0.01, n_th=(0.0, 0.0)):
    """The working point used throughout the bundled scenarios.

    Resolved-sideband resonators at 10 kappa, single-photon coupling
    kappa/10000, blue-detuned drive on side 1 and red-detuned on side 2.
    """
    return PhysicalParams(
        kappa=(1.0, 1.0),
        gamma=(1e-5, 1e-5),
        omega=(10.0, 10.0),
        g=(1e-4, 1e-4),
        delta=(-10.0, 10.0),
        drive=(drive, drive),
        j_coupling=j_coupling,
        n_th=n_th,
    )


@dataclass(frozen=True)
class WorkingPoint:
    """Steady state plus every derived rate.

    ``rate`` is the magnitude of the optomechanical gain/damping; its sign
    (gain on the blue-detuned side, damping on the red-detuned side) is
    applied by consumers from the sign of ``delta_eff``.  ``gamma_eff`` is
    the mean of the two rates and drives the balanced reduced model.
    """

    alpha: tuple
    xi: tuple
    delta_eff: tuple
    g_eff: tuple
    spring_shift: tuple
    rate: tuple
    gamma_eff: float

    def rate_imbalance(self):
        """Relative gain/damping mismatch |rate1 - rate2| / mean."""
        if self.gamma_eff == 0.0:
            return 0.0
        return abs(self.rate[0] - self.rate[1]) / self.gamma_eff


def optical_spring_shift(g_eff, omega, kappa):
    """Radiation-pressure frequency shift 8|G|^2 w / (k^2 + 16 w^2)."""
    if kappa <= 0:
        raise ValidationError("kappa must be > 0")
    g2 = abs(g_eff) ** 2
    return 8.0 * g2 * omega / (kappa * kappa + 16.0 * omega * omega)


def optomechanical_rate(g_eff, omega, kappa):
    """Optomechanical gain/damping magnitude (4|G|^2/k) 16w^2/(k^2+16w^2).

    The caller assigns the sign from the effective detuning: a drive on the
    blue sideband (delta_eff = -omega) produces gain, on the red sideband
    (delta_eff = +omega) damping.
    """
    if kappa <= 0:
        raise ValidationError("kappa must be > 0")
    g2 = abs(g_eff) ** 2
    w2 = 16.0 * omega * omega
    return 4.0 * g2 / kappa * w2 / (kappa * kappa + w2)


def pt_threshold(omega_m, j_coupling):
    """Gain/damping rate at which the balanced spectrum turns complex.

    Evaluates 2*sqrt(2)*w*sqrt(1 - sqrt(1 - (J/w)^2)) in the cancellation
    free form 2*sqrt(2)*J / sqrt(1 + sqrt(1 - (J/w)^2)); for J << w this
    approaches 2J.
    """
    if omega_m <= 0:
        raise ValidationError("omega_m must be > 0")
    if j_coupling < 0 or j_coupling > omega_m:
        raise DomainError(f"j_coupling must lie in [0, omega_m], got {j_coupling}")
    x = j_coupling / omega_m
    return 2.0 * math.sqrt(2.0) * j_coupling / math.sqrt(1.0 + math.sqrt(1.0 - x * x))


def thermal_occupation(omega, temperature):
    """Bose-Einstein occupation 1/(exp(hbar w / kB T) - 1); 0 at T = 0.

    ``omega`` is an angular frequency in rad/s and ``temperature`` in
    kelvin.  Uses expm1 so small hbar*w/kB*T stays accurate.
    """
    if temperature < 0:
        raise ValidationError("temperature must be >= 0")
    if omega <= 0:
        raise ValidationError("omega must be > 0")
    if temperature == 0.0:
        return 0.0
    x = scipy.constants.hbar * omega / (scipy.constants.k * temperature)
    return 1.0 / math.expm1(x)


def _alpha_of_xi(params, xi, scale):
    deff = np.array([params.delta[0] - params.g[0] * xi[0],
                     params.delta[1] - params.g[1] * xi[1]])
    drive = scale * np.asarray(params.drive)
    alpha = -1j * drive / (0.5 * np.asarray(params.kappa) + 1j * deff)
    return alpha, deff


def _residual(params, alpha, xi, scale):
    deff = np.array([params.delta[0] - params.g[0] * xi[0],
                     params.delta[1] - params.g[1] * xi[1]])
    drive = scale * np.asarray(params.drive)
    r_cav = (0.5 * np.asarray(params.kappa) + 1j * deff) * alpha + 1j * drive
    r_mech = np.array([
        params.omega[0] * xi[0] - params.j_coupling * xi[1] - params.g[0] * abs(alpha[0]) ** 2,
        params.omega[1] * xi[1] - params.j_coupling * xi[0] - params.g[1] * abs(alpha[1]) ** 2,
    ])
    return max(np.max(np.abs(r_cav)), np.max(np.abs(r_mech)))


def solve_steady_state(params, tol=STEADY_STATE_RESIDUAL, max_iter=500,
                       homotopy_stages=4):
    """Solve the driven steady state and fill every derived quantity.

    The solution branch is the one continuously connected to the undriven
    fixed point: the drive is ramped over ``homotopy_stages`` stages and each
    stage warm-starts from the previous one.  Each stage runs a damped fixed
    point on the displacements (closed-form cavity update inside) and
    switches to Newton if that stalls.  A near-singular Newton matrix along
    the path emits :class:`BistableWarning`.

    Raises :class:`NoConvergence` if the residual target is missed.
    """
    if params.omega[0] * params.omega[1] == params.j_coupling ** 2:
        raise ValidationError("omega1*omega2 must differ from j_coupling^2")
    mech = np.array([[params.omega[0], -params.j_coupling],
                     [-params.j_coupling, params.omega[1]]])
    g_vec = np.asarray(params.g)
    xi = np.zeros(2)

    for scale in np.linspace(1.0 / homotopy_stages, 1.0, homotopy_stages):
        converged = False
        prev_res = np.inf
        for it in range(max_iter):
            alpha, deff = _alpha_of_xi(params, xi, scale)
            res = _residual(params, alpha, xi, scale)
            if res < tol:
                converged = True
                break
            rhs = g_vec * np.abs(alpha) ** 2
            xi_next = np.linalg.solve(mech, rhs)
            if it >= 20 and res > 0.5 * prev_res:
                # fixed point is stalling; take a Newton step instead
                dalpha2 = (np.abs(alpha) ** 2 * 2.0 * deff * g_vec
                           / (0.25 * np.asarray(params.kappa) ** 2 + deff ** 2))
                jac = mech - np.diag(g_vec * dalpha2)
                if abs(np.linalg.det(jac)) < 1e-10 * abs(np.linalg.det(mech)):
                    warnings.warn("near-singular steady-state Jacobian; "
                                  "possible bistability", BistableWarning)
                fvec = mech @ xi - rhs
                xi = xi - np.linalg.solve(jac, fvec)
            else:
                xi = 0.3 * xi + 0.7 * xi_next
            prev_res = res
        if not converged:
            raise NoConvergence(
                f"steady state residual {res:.3e} above {tol:g} at drive "
                f"scale {scale:g} after {max_iter} iterations")

    alpha, deff = _alpha_of_xi(params, xi, 1.0)
    g_eff = tuple(g_vec * alpha)
    shift = tuple(optical_spring_shift(g_eff[i], params.omega[i], params.kappa[i])
                  for i in range(2))
    rate = tuple(optomechanical_rate(g_eff[i], params.omega[i], params.kappa[i])
                 for i in range(2))
    return WorkingPoint(
        alpha=tuple(alpha),
        xi=tuple(xi),
        delta_eff=tuple(deff),
        g_eff=g_eff,
        spring_shift=shift,
        rate=rate,
        gamma_eff=0.5 * (rate[0] + rate[1]),
    )
