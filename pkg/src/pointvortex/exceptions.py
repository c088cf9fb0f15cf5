"""Error types raised across the package.

Each class carries an ``exit_code`` used by the command-line front end:
2 for invalid input, 3 for numerical non-convergence.
"""


class PointVortexError(Exception):
    exit_code = 1


class ValidationError(PointVortexError, ValueError):
    exit_code = 2


class DomainViolationError(ValidationError):
    """A vortex position lies outside the closed domain."""


class SingularConfigurationError(ValidationError):
    """Two vortices coincide (or nearly), so the log-interaction is infinite."""


class AdmissibilityError(ValidationError):
    """Inverse temperature outside the range where the ensemble is normalizable."""


class EnumerationTooLargeError(ValidationError):
    pass


class NormalizationError(ValidationError):
    pass


class UndefinedFreeEnergyError(ValidationError):
    pass


class ConvergenceError(PointVortexError, RuntimeError):
    """Iteration hit its limit. ``trace`` holds the residual history."""

    exit_code = 3

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class OracleUnconvergedError(ConvergenceError):
    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine
