"""Exception types shared across the solver and metering layers."""


class NumericsError(RuntimeError):
    """Base class for failures arising inside a solve."""


class NonFiniteResidual(NumericsError):
    """Residual or Jacobian-vector product produced Inf/NaN.

    Usually a sign that the working precision is too low for the current
    iterate, or that the iteration is diverging.
    """


class NonFiniteInner(NumericsError):
    """A BI-CGSTAB recurrence scalar became Inf/NaN."""


class LineSearchFailure(NumericsError):
    """No trial step satisfied the sufficient-decrease condition."""


class TooTightForSingle(ValueError):
    """Requested tolerance lies below the single-precision accuracy floor."""


class IncompleteTrace(ValueError):
    """A solve trace is missing the operation counters needed for metering."""


class CalibrationFailed(RuntimeError):
    """Energy-model fit was underdetermined or numerically singular."""


class CounterUnavailable(RuntimeError):
    """No hardware energy counter is readable on this platform."""
