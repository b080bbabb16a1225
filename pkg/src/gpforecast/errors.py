"""Exception hierarchy shared by every gpforecast module."""


class GPForecastError(Exception):
    """Base class for all errors raised by gpforecast."""


class DimensionMismatch(GPForecastError, ValueError):
    pass


class NotPositiveDefinite(GPForecastError, ArithmeticError):
    pass


class EmptyData(GPForecastError, ValueError):
    pass


class NonFiniteObjective(GPForecastError, ArithmeticError):
    pass


class AllRestartsFailed(GPForecastError, RuntimeError):
    pass


class NegativeCount(GPForecastError, ValueError):
    pass


class ParseError(GPForecastError, ValueError):
    """Malformed CSV content; ``row`` is the 1-based line number in the file."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class MissingColumn(ParseError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"missing required column {column!r}")


class RangeError(ParseError):
    pass


class GapError(GPForecastError, ValueError):
    pass


class EmptySplit(GPForecastError, ValueError):
    pass


class TooFewRows(GPForecastError, ValueError):
    pass


class EmptyInput(GPForecastError, ValueError):
    pass


class ModelFormatError(GPForecastError, ValueError):
    pass
