"""Exception hierarchy.

``DataError`` subclasses signal bad inputs or configuration (CLI exit code 1);
everything else deriving from ``EdmsError`` is a runtime failure (exit code 2).
"""


class EdmsError(Exception):
    """Base class for all errors raised by the package."""


class DataError(EdmsError, ValueError):
    """Invalid input data or configuration."""


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


class NonFiniteValue(DataError):
    pass


class DuplicateSeriesId(DataError):
    pass


class FrequencyMismatch(DataError):
    """Date spacing disagrees with the declared frequency."""


class EmptyPanel(DataError):
    pass


class SplitTooSmall(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class NonPositiveValue(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class KeyMismatch(DataError):
    pass


class TooFewMembers(DataError):
    pass


class EmptyInput(DataError):
    pass


class ZeroBaseline(DataError):
    pass


class NearZeroDenominator(DataError):
    def __init__(self, steps):
        self.steps = list(steps)
        super().__init__(f"near-zero MAPE denominator at steps {self.steps}")


class ConfigError(DataError):
    pass


class DivergedLoss(EdmsError, FloatingPointError):
    pass


class MemberFitFailure(EdmsError):
    def __init__(self, label, reason):
        self.label = label
        self.reason = reason
        super().__init__(f"member {label!r} failed: {reason}")


class AllSeriesFailed(EdmsError):
    """No series in a dataset survived forecasting."""
