"""Desk-scale simulator for mechanical gain/loss (PT) physics in two
coupled optomechanical systems: nonlinear and linearized semiclassical
dynamics, the balanced reduced model with its non-Hermitian spectrum and
threshold, and the quantum-noise phonon budgets."""

from .model import (
    PhysicalParams,
    WorkingPoint,
    canonical_params,
    optical_spring_shift,
    optomechanical_rate,
    pt_threshold,
    solve_steady_state,
    thermal_occupation,
)
from .ptanalysis import (
    BiorthogonalBasis,
    EffectiveHamiltonian,
    Phase,
    Spectrum,
    analytic_evolution,
    beat_frequency,
    biorthogonal_basis,
    build_heff,
    spectrum,
)
from .quantum import (
    DriftMatrix,
    InitialMoments,
    NoiseModel,
    PhononBreakdown,
    Region,
    build_drift,
    drift_from_rates,
    moments_lyapunov,
    phonon_spontaneous,
    phonon_stimulated,
    phonon_total,
    propagator,
    stability_spectrum,
)
from .semiclassical import (
    ClassicalState,
    ReducedState,
    TimeSeries,
    fit_envelope_rate,
    integrate_full,
    integrate_linearized,
    integrate_reduced,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
