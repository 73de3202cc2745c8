"""Exception hierarchy.

Two families matter to callers: :class:`ConfigError` (bad input, CLI exit 2)
and :class:`NumericError` (a computation broke down, CLI exit 3).
"""

from __future__ import annotations


class SensingError(Exception):
    """Base class for all package errors."""


class ConfigError(SensingError):
    """Invalid model or scenario description."""


class NumericError(SensingError):
    """A numerical routine failed (non-PD matrix, underflow, ...)."""


class ValidationError(ConfigError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(ConfigError):
    pass


class DimensionMismatch(ConfigError, ValueError):
    pass


class NonStochastic(ConfigError):
    def __init__(self, column: int, column_sum: float):
        self.column = column
        self.column_sum = column_sum
        super().__init__(
            f"column {column} sums to {column_sum:.12g}, expected 1 "
            "(transition matrix must be column-stochastic)"
        )


class NegativeEntry(ConfigError):
    def __init__(self, row: int, column: int, value: float):
        self.row, self.column, self.value = row, column, value
        super().__init__(f"entry ({row}, {column}) = {value:.12g} is outside [0, 1]")


class InvalidARParameter(ConfigError):
    pass


class BudgetExceeded(ConfigError):
    pass


class EmptyControl(ConfigError):
    pass


class InvalidTestPoint(ConfigError, ValueError):
    pass


class CholeskyFailure(NumericError):
    pass


class NonPDMixture(NumericError):
    pass


class SingularInnovation(NumericError):
    pass


class DegenerateLikelihood(NumericError):
    pass
