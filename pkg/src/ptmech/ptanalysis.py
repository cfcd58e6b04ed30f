"""Non-Hermitian analysis of the balanced gain/loss resonator pair.

The reduced dynamics i d|psi>/dt = H |psi| over (q1, p1, q2, p2) has

    H = i [[0,      w,   0,  0],
           [-w, geff/2,  J,  0],
           [0,      0,   0,  w],
           [J,      0,  -w, -geff/2]]

whose eigenvalues come in pairs +-lambda_+ and +-lambda_- with

    lambda_pm = sqrt(w^2 - (geff^2 pm sqrt(geff^4 - 16 w^2 (geff^2 - 4 J^2))) / 8).

Below the threshold rate every eigenvalue is real (symmetric phase) and
the mirrors beat at lambda_- minus lambda_+; above it a conjugate pair
appears and one mirror grows exponentially (broken phase).  The left/right
eigenvector pair supplies a spectral propagator that is exact wherever the
spectrum is non-degenerate.
"""

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrum,
    Inconsistent,
    ValidationError,
    WrongPhase,
)
from .model import pt_threshold
from .numerics import eig_complex
from .semiclassical import ReducedState

DEGENERACY_GAP_FACTOR = 1e-6  # refuse the spectral propagator below this gap
THRESHOLD_BAND_FACTOR = 1e-10  # |gamma_eff - threshold| band for AtThreshold


class Phase(enum.Enum):
    PT_SYMMETRIC = "pt-symmetric"
    BROKEN = "broken"
    AT_THRESHOLD = "at-threshold"


@dataclass(frozen=True)
class EffectiveHamiltonian:
    matrix: np.ndarray
    omega_m: float
    j: float
    gamma_eff: float


@dataclass(frozen=True)
class Spectrum:
    lam: np.ndarray          # four numeric eigenvalues
    closed_form: tuple       # (lambda_plus, lambda_minus)
    phase: Phase


@dataclass(frozen=True)
class BiorthogonalBasis:
    lam: np.ndarray   # eigenvalues, one per basis column
    x: np.ndarray     # right eigenvectors (columns)
    y: np.ndarray     # left eigenvectors (columns), H^dag y_i = conj(lam_i) y_i
    d: np.ndarray     # overlaps  <y_i, x_i>
    chi: np.ndarray


def build_heff(omega_m, j, gamma_eff):
    """Assemble the effective non-Hermitian Hamiltonian."""
    if omega_m <= 0:
        raise ValidationError("omega_m must be > 0")
    if j < 0:
        raise ValidationError("j must be >= 0")
    if gamma_eff < 0:
        raise ValidationError("gamma_eff must be >= 0")
    a = np.array([
        [0.0, omega_m, 0.0, 0.0],
        [-omega_m, 0.5 * gamma_eff, j, 0.0],
        [0.0, 0.0, 0.0, omega_m],
        [j, 0.0, -omega_m, -0.5 * gamma_eff],
    ])
    return EffectiveHamiltonian(matrix=1j * a, omega_m=float(omega_m),
                                j=float(j), gamma_eff=float(gamma_eff))


def closed_form_eigenvalues(omega_m, j, gamma_eff):
    """(lambda_plus, lambda_minus) from the quartic's explicit roots."""
    g2 = gamma_eff * gamma_eff
    inner = np.sqrt(complex(g2 * g2 - 16.0 * omega_m ** 2 * (g2 - 4.0 * j * j)))
    lam_p = np.sqrt(complex(omega_m ** 2 - (g2 + inner) / 8.0))
    lam_m = np.sqrt(complex(omega_m ** 2 - (g2 - inner) / 8.0))
    return lam_p, lam_m


def _best_match(numeric, reference):
    """Pair two 4-element spectra by the min-cost permutation."""
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(4)):
        cost = sum(abs(numeric[perm[i]] - reference[i]) for i in range(4))
        if cost < best_cost:
            best, best_cost = perm, cost
    return np.array([numeric[p] for p in best]), best_cost


def spectrum(h, tol=None):
    """Numeric + closed-form spectrum with phase classification.

    The two routes must agree to 1e-8 relative or :class:`Inconsistent` is
    raised.  Classification uses ``tol`` (default 1e-10 * omega_m) on
    max |Im lambda|; the AtThreshold band tests |gamma_eff - threshold|
    against the same tolerance.
    """
    if tol is None:
        tol = THRESHOLD_BAND_FACTOR * h.omega_m
    if tol <= 0:
        raise ValidationError("tol must be > 0")
    lam_num, _ = eig_complex(h.matrix)
    lam_p, lam_m = closed_form_eigenvalues(h.omega_m, h.j, h.gamma_eff)
    reference = np.array([lam_p, -lam_p, lam_m, -lam_m])
    lam, cost = _best_match(lam_num, reference)
    scale = max(np.max(np.abs(reference)), 1e-300)
    if cost / (4.0 * scale) > 1e-8:
        raise Inconsistent(
            f"closed-form and numeric spectra disagree: mean mismatch "
            f"{cost / 4.0:.3e} on scale {scale:.3e}")
    gamma_pt = pt_threshold(h.omega_m, h.j) if h.j <= h.omega_m else np.inf
    if abs(h.gamma_eff - gamma_pt) < tol:
        phase = Phase.AT_THRESHOLD
    elif np.max(np.abs(lam.imag)) < tol:
        phase = Phase.PT_SYMMETRIC
    else:
        phase = Phase.BROKEN
    return Spectrum(lam=lam, closed_form=(lam_p, lam_m), phase=phase)


def beat_frequency(s):
    """Envelope beat rate lambda_minus - lambda_plus of the symmetric phase.

    Raises :class:`WrongPhase` in the broken phase; exactly at threshold the
    splitting has closed and 0 is returned.
    """
    if s.phase is Phase.BROKEN:
        raise WrongPhase("beat frequency is undefined in the broken phase")
    if s.phase is Phase.AT_THRESHOLD:
        return 0.0
    lam_p, lam_m = s.closed_form
    return float(lam_m.real - lam_p.real)


def biorthogonal_basis(h):
    """Right/left eigenvector pair with overlaps, via the closed form.

    Raises :class:`DegenerateSpectrum` when the smallest eigenvalue gap is
    below 1e-6 * omega_m (the expansion is ill-conditioned at and near the
    exceptional point; callers fall back to the matrix exponential there).
    """
    lam_p, lam_m = closed_form_eigenvalues(h.omega_m, h.j, h.gamma_eff)
    lam = np.array([lam_p, -lam_p, lam_m, -lam_m])
    gaps = np.abs(np.subtract.outer(lam, lam))[~np.eye(4, dtype=bool)]
    if np.min(gaps) < DEGENERACY_GAP_FACTOR * h.omega_m:
        raise DegenerateSpectrum(
            f"minimum eigenvalue gap {np.min(gaps):.3e} below "
            f"{DEGENERACY_GAP_FACTOR * h.omega_m:.3e}")
    om, j, geff = h.omega_m, h.j, h.gamma_eff
    with np.errstate(divide="raise", invalid="raise"):
        chi = om ** 2 / (0.5 * geff * lam + 1j * lam ** 2 - 1j * om ** 2)
        x = np.stack([
            j / lam * chi,
            -1j * j / om * chi,
            1j * om / lam * np.ones(4),
            np.ones(4),
        ])
        cl = np.conj(lam)
        cc = np.conj(chi)
        y = np.stack([
            -1j * j / cl - j / cl * cc,
            1j * j / om * cc,
            1j * om / cl + j ** 2 / (om * cl) * cc,
            np.ones(4),
        ])
    d = np.einsum("ki,ki->i", np.conj(y), x)
    return BiorthogonalBasis(lam=lam, x=x, y=y, d=d, chi=chi)


def normalized_overlaps(basis):
    """|d_i| scaled by the eigenvector norms; tends to 0 at coalescence."""
    return np.abs(basis.d) / (np.linalg.norm(basis.x, axis=0)
                              * np.linalg.norm(basis.y, axis=0))


def analytic_evolution(basis, init, t):
    """Propagate a :class:`ReducedState` with the spectral expansion.

    Computes sum_i x_i exp(-i lam_i t) <y_i, c> / d_i for the initial
    coefficient vector c = (q1, p1, q2, p2).  The result must be real to
    1e-9 relative; a larger imaginary residue raises :class:`Inconsistent`.
    """
    c = init.vector().astype(complex)
    beta = (np.conj(basis.y).T @ c) / basis.d
    psi = basis.x @ (beta * np.exp(-1j * basis.lam * float(t)))
    scale = max(1.0, np.max(np.abs(psi)))
    if np.max(np.abs(psi.imag)) > 1e-9 * scale:
        raise Inconsistent(
            f"imaginary residue {np.max(np.abs(psi.imag)):.3e} above 1e-9 "
            f"relative; spectral expansion inconsistent")
    return ReducedState(q=(psi[0].real, psi[2].real), p=(psi[1].real, psi[3].real))


def analytic_trajectory(basis, init, times):
    """Vectorized :func:`analytic_evolution` over an array of times."""
    c = init.vector().astype(complex)
    beta = (np.conj(basis.y).T @ c) / basis.d
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), basis.lam))
    psi = phases * beta[None, :] @ basis.x.T
    scale = max(1.0, np.max(np.abs(psi)))
    if np.max(np.abs(psi.imag)) > 1e-9 * scale:
        raise Inconsistent("imaginary residue above 1e-9 relative")
    return psi.real
