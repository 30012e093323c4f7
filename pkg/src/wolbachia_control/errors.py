"""Exception and warning types shared across the package."""

from __future__ import annotations


class ModelError(ValueError):
    """Base class for invalid model inputs."""


class ThetaOutOfRange(ModelError):
    pass


class DenominatorVanishes(ModelError):
    pass


class DomainError(ModelError):
    """An argument lies outside the domain of the function."""


class NotInvadable(ModelError):
    """The potential F(1) is not positive, so no threshold theta_c exists."""


class AlphaBelowThreshold(ModelError):
    pass


class OrderingError(ModelError):
    pass


class DomainTooSmall(ModelError):
    pass


class StabilityViolation(ModelError):
    pass


class GridMismatch(ModelError):
    pass


class InsufficientData(ModelError):
    pass


class ThresholdError(RuntimeError):
    pass


class BadBracket(ThresholdError):
    pass


class NonMonotone(ThresholdError):
    pass


class UndecidedVerdict(ThresholdError):
    """A bisection probe could not be classified as invasion or extinction."""


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class SupportTruncated(UserWarning):
    """The field does not vanish at the edge of the grid."""
