"""Exception types shared across the package."""


class LobexecError(Exception):
    """Base class for all package errors."""


class GapOrOverlap(LobexecError):
    """Segments do not partition the trading horizon."""


class AssumptionViolated(LobexecError):
    """A standing model assumption (lower bound or boundedness) fails."""


class OutOfRange(LobexecError):
    """Time argument lies outside [0, T]."""


class PreconditionViolated(LobexecError):
    """An operation was called outside its documented domain."""


class StepFailure(LobexecError):
    """A backward integration step hit a non-positive denominator or left [0, 1/2]."""


class TradeOutsideHorizon(LobexecError):
    """A trade time is not covered by the simulation grid."""


class DegenerateY(LobexecError):
    """The value process hit the boundary of (0, 1/2) where it must be interior."""
