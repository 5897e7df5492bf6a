"""Exception types shared across the package."""


class CoverGameError(Exception):
    """Base class for all package errors."""


class InvalidInputError(CoverGameError, ValueError):
    """A game, profile, or argument violates its stated precondition."""


class InvalidRuleError(InvalidInputError):
    """A utility rule cannot be used (negative values, f(1) = 0, ...)."""


class CapacityError(CoverGameError):
    """A coverage count exceeds the largest multiplicity a rule supports."""


class ResourceLimitError(CoverGameError):
    """An exhaustive enumeration would exceed its configured cap."""


class UndefinedRatioError(CoverGameError, ZeroDivisionError):
    """An efficiency ratio has a zero optimal welfare in the denominator."""


class DomainError(InvalidInputError):
    """A parameter lies outside the interval where a formula is defined."""


class ConstructionInapplicableError(CoverGameError):
    """A worst-case construction does not apply to the given rule."""


class LPError(CoverGameError):
    """The linear program is infeasible or unbounded."""

    def __init__(self, status: str, message: str = ""):
        super().__init__(message or status)
        self.status = status
