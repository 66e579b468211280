"""Exception hierarchy shared by every tailrisk module.

Each class carries the exit code the batch CLI maps it to (2 usage, 3 data,
4 non-convergence) and also derives from the closest builtin so library callers
can catch ``ValueError`` without importing this module.
"""


class TailRiskError(Exception):
    exit_code = 1


# Usage errors (exit 2)

class UsageError(TailRiskError, ValueError):
    exit_code = 2


class InvalidParameterError(UsageError):
    """Distribution parameters outside their admissible range (e.g. beta <= 0)."""


class DomainError(UsageError):
    """Argument outside the domain of the operation (e.g. a probability >= 1)."""


class RangeError(UsageError):
    """Index-like argument out of range (e.g. Hill k >= n)."""


class WrongBranchError(UsageError):
    """Domain-of-attraction check called on the wrong endpoint branch."""


class CapabilityError(UsageError):
    """A requested criterion needs a CdfSpec field that was not supplied."""


class InvalidRepresentationError(UsageError):
    """Karamata / de Haan representation that cannot define a quantile function."""


class InvalidInputError(UsageError):
    """Caller contract violated (unsorted grid, non-converged fit, ...)."""


class ConfigError(UsageError):
    """Simulation or schema configuration that cannot be honoured."""


# Data errors (exit 3)

class DataError(TailRiskError, ValueError):
    exit_code = 3


class InsufficientDataError(DataError):
    pass


class NoExceedanceError(DataError):
    pass


class DegenerateSampleError(DataError):
    pass


class SchemaError(DataError):
    pass


class BelowThresholdError(DataError):
    """Tail estimator queried below its anchoring threshold."""


class DivergedIntegralError(DataError, ArithmeticError):
    pass


# Estimation errors (exit 4)

class NonConvergenceError(TailRiskError, ArithmeticError):
    exit_code = 4

    def __init__(self, message, best_point=None, best_value=None):
        super().__init__(message)
        self.best_point = best_point
        self.best_value = best_value
