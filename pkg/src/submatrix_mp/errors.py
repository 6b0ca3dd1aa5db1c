"""Exception types raised across the package."""


class SubmatrixError(Exception):
    """Base class for all package errors."""


class ValidationError(SubmatrixError, ValueError):
    """A parameter violates an operation's precondition."""


class NoDivergence(SubmatrixError):
    """State evolution stalled below the target level (lambda too small for degree d)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SubcriticalLambda(SubmatrixError):
    """lambda <= 1/e: no finite degree makes the state evolution diverge."""


class OutsideG(SubmatrixError):
    """(lambda1, lambda2) is not in the bicluster divergence region."""


class InvalidRegime(SubmatrixError):
    """Cleanup constants are undefined for the given (epsilon, lambda)."""


class NoFeasibleDelta(SubmatrixError):
    """No withholding fraction on the grid satisfies the voting condition."""


class ZeroVector(SubmatrixError):
    """Power iteration hit an exactly zero vector on every restart."""


class TooLarge(SubmatrixError):
    """Exhaustive enumeration exceeds the configured bound."""
