"""Exception types shared across the package."""


class MtvError(Exception):
    """Base class for all package errors."""


class ParameterViolation(MtvError):
    """A configured parameter breaks one of the standing inequalities."""


class DistanceTooLarge(MtvError):
    pass


class NoIntersection(MtvError):
    pass


class DefectTooLarge(MtvError):
    pass


class NonConvergent(MtvError):
    pass


class KindMismatch(MtvError):
    pass


class CoverageFailure(MtvError):
    pass


class NotInSaturation(MtvError):
    pass


class OutOfChart(MtvError):
    pass


class DiscMismatch(MtvError):
    pass


class SubdivisionOverflow(MtvError):
    pass


class DeadSymbol(MtvError):
    pass


class NotAdmissible(MtvError):
    pass


class HorizonTooShort(MtvError):
    pass


class ChoiceExhausted(MtvError):
    pass


class EmptyIntersection(MtvError):
    pass


class InsufficientSamples(MtvError):
    pass


class NotAllowed(MtvError):
    pass


class BuildBudgetExceeded(MtvError):
    """A requested construction exceeds the configured size budget.

    Raised instead of attempting a build whose element count or running
    time estimate is orders of magnitude beyond workstation scale.  The
    message carries the estimate so callers can report it.
    """
