"""Exception and warning vocabulary shared across the package."""


class CqnlsError(Exception):
    """Base class for all package errors."""


class InvalidField(CqnlsError):
    """Field values are non-finite or inconsistent with their grid."""


class OmegaOutOfRange(CqnlsError, ValueError):
    """Frequency parameter outside the admissible interval."""


class NoSoliton(CqnlsError):
    """No solitary wave exists at the requested frequency."""


class ConvergenceFailure(CqnlsError):
    """An iterative solver exhausted its budget without converging."""


class NoNegativeEnergyMinimizer(CqnlsError):
    """Constrained energy flow found no localized negative-energy state."""


class NumericalBlowup(CqnlsError):
    """Time stepping produced non-finite values."""


class DimensionError(CqnlsError, ValueError):
    """Operation invoked on a field of the wrong spatial dimension."""


class Undefined(CqnlsError, ZeroDivisionError):
    """Quantity undefined for this input (typically a zero field)."""


class EigenFailure(CqnlsError):
    """Eigenvalue iteration failed to converge."""


class AssumptionViolated(CqnlsError):
    """Spectral preconditions for the stability criterion do not hold."""


class NotEnoughData(CqnlsError, ValueError):
    """Too few samples for the requested fit or estimate."""


class ConfigParseError(CqnlsError):
    """Run configuration file is syntactically invalid."""


class ConfigValidationError(CqnlsError):
    """Run configuration violates a documented precondition."""


class EdgeMassWarning(UserWarning):
    """Significant mass near the box edge; moment-based diagnostics degrade."""


class BoundaryMinimumWarning(UserWarning):
    """Minimum attained at the boundary of the sampled parameter range."""
