"""Exception types shared across the package."""


class SemuepError(Exception):
    """Base class for all package errors."""


class FormatError(SemuepError):
    """A file does not conform to the expected binary layout."""


class CorruptionError(SemuepError):
    """Data is structurally valid but its contents are inconsistent."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class DegenerateInputError(SemuepError):
    """An input (e.g. a zero vector) for which the operation is undefined."""


class DimensionError(SemuepError):
    """Operands have incompatible dimensions."""


class InputError(SemuepError):
    """An argument violates an operation's precondition."""


class ConfigError(SemuepError):
    """A configuration value is invalid or inconsistent."""


class BudgetViolationError(SemuepError):
    """An allocation exceeds the channel-use budget. Never silently truncated."""


class NumericError(SemuepError):
    """A non-finite value appeared where a finite one is required."""


class TrainingDivergedError(NumericError):
    """Training produced non-finite values; carries the last finite parameters."""

    def __init__(self, message: str, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class UndefinedEffectError(SemuepError):
    """An effect-size statistic is undefined (zero variance)."""
