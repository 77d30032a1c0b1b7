"""Exception types raised across the package."""


class ChainBreakError(Exception):
    """Base class for all package errors."""


class ParameterError(ChainBreakError, ValueError):
    """An argument violates a precondition (sign, range, shape)."""


class AssumptionViolation(ChainBreakError):
    """A potential is not strictly convex on the required interval."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class DomainError(ChainBreakError, ValueError):
    """A time or argument lies outside the interval where a formula holds."""


class RegimeError(ChainBreakError, ValueError):
    """The break-time statistic is undefined for the given (eps, sigma)."""


class DomainEscapeError(ChainBreakError):
    """A nonlinear path left the interval on which the potential was certified.

    Carries the time, the 1-based link index and the offending gap.
    """

    def __init__(self, t, link, gap, limit=None):
        msg = f"gap of link {link} reached {gap!r} at t={t!r}"
        if limit is not None:
            msg += f" (certified up to {limit!r})"
        super().__init__(msg)
        self.t = t
        self.link = link
        self.gap = gap
        self.limit = limit


class ConfigError(ChainBreakError, ValueError):
    """An experiment configuration is malformed."""
