"""Exception hierarchy shared by all ptmech modules.

Exit-code mapping used by the CLI:
  2  configuration problems (ParseError, ValidationError)
  3  numerical failures (NoConvergence, Diverged, StepTooLarge,
     QuadratureFailure, Inconsistent, InsufficientPeaks)
  4  physics-regime refusals (DomainError, WrongPhase, DegenerateSpectrum,
     UnbalancedRates)
"""


class PtmechError(Exception):
    """Base class for all ptmech errors."""


class ConfigError(PtmechError):
    """Base class for configuration problems (CLI exit code 2)."""


class ParseError(ConfigError):
    """Config file could not be parsed."""


class ValidationError(ConfigError):
    """A value violates a documented invariant."""


class NumericsError(PtmechError):
    """Base class for numerical failures (CLI exit code 3)."""


class NoConvergence(NumericsError):
    """An iterative solver failed to reach its residual target."""


class Diverged(NumericsError):
    """A trajectory exceeded the overflow guard."""


class StepTooLarge(NumericsError):
    """An integration step cannot satisfy the error tolerance."""


class QuadratureFailure(NumericsError):
    """Adaptive quadrature could not reach tolerance within its budget."""


class Inconsistent(NumericsError):
    """Two redundant computations of the same quantity disagree."""


class InsufficientPeaks(NumericsError):
    """Too few oscillation peaks in the window to fit an envelope."""


class PhysicsError(PtmechError):
    """Base class for physics-regime refusals (CLI exit code 4)."""


class DomainError(PhysicsError):
    """Parameters outside the domain of a closed-form expression."""


class WrongPhase(PhysicsError):
    """The requested quantity is undefined in the current phase."""


class DegenerateSpectrum(PhysicsError):
    """Eigenvectors coalesce; the bi-orthogonal expansion is ill-posed."""


class UnbalancedRates(PhysicsError):
    """Gain and damping rates too unequal for the balanced reduced model."""


class BistableWarning(UserWarning):
    """The steady-state continuation passed near a singular Jacobian."""
