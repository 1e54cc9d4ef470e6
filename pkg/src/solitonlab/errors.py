"""Exception hierarchy shared by every module of the package."""


class SolitonLabError(Exception):
    """Base class for all package errors."""


class RejectError(SolitonLabError, ValueError):
    """A parameter set violates its invariants; ``field`` names the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidInputError(SolitonLabError, ValueError):
    pass


class SingularStateError(SolitonLabError, ArithmeticError):
    """The field was evaluated where a metric scale vanishes."""


class NonFiniteRHSError(SolitonLabError, ArithmeticError):
    pass


class MaxStepsError(SolitonLabError, RuntimeError):
    pass


class EmptyTrajectoryError(SolitonLabError, ValueError):
    pass


class GammaZeroError(SolitonLabError, ArithmeticError):
    pass


class HypothesisViolatedError(SolitonLabError, ValueError):
    """Initial data do not satisfy a blow-up proposition's hypotheses."""


class OutOfIntervalError(SolitonLabError, ValueError):
    pass


class DomainError(SolitonLabError, ValueError):
    pass


class ConfigError(SolitonLabError, ValueError):
    """Malformed CLI configuration (maps to exit code 2)."""
