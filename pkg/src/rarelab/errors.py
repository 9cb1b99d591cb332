"""Exception types raised across the package."""


class RareLabError(Exception):
    """Base class for all package errors."""


class GaussAtZero(RareLabError, ValueError):
    """The Gauss map was asked to act on 0 (or on a point below the digit cap)."""


class NoClosedFormMeasure(RareLabError):
    """The system has no closed-form invariant measure; estimate it instead."""


class EmptyCylinder(RareLabError, ValueError):
    """A symbolic word is inadmissible for the system's Markov structure."""


class DegenerateTarget(RareLabError, ValueError):
    """A rare event came out empty or with zero measure."""


class EmptyApproximation(RareLabError):
    """No cylinder of the requested rank fits inside the interval."""


class HittingOverflow(RareLabError):
    """No visit to the target within the step cap.

    The partial record collected so far is attached as ``partial`` when one
    exists, so overflow counts can still be reported.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ReturnOverflow(RareLabError):
    """No return to the reference set within ``return_cap`` steps."""


class DimensionMismatch(RareLabError, ValueError):
    pass


class TooManyOverflows(RareLabError):
    """Overflowed orbits exceeded the tolerated fraction of a Monte Carlo run."""


class NoFixedPoint(RareLabError):
    pass


class GridMismatch(RareLabError, ValueError):
    pass


class ConfigError(RareLabError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
