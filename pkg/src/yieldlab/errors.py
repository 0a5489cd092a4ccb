"""Exception types shared across the game engine, store, server, and toolkit."""


class YieldLabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(YieldLabError, ValueError):
    """An input coordinate is outside the simulator's domain (non-finite or negative)."""


class FieldValidationError(YieldLabError, ValueError):
    """A player-supplied field failed validation. Carries the offending field name."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class MalformedTokenError(FieldValidationError):
    """Login token does not match the 2-4 letters + 4 digits pattern."""

    def __init__(self, message: str):
        super().__init__("token", message)


class UnknownTokenError(YieldLabError):
    """Token is well-formed but no account was provisioned for it."""


class DuplicateTokenError(YieldLabError):
    """An account with this token already exists."""


class RunRejectedError(YieldLabError):
    """Budget gate refused the run (balance not in the black)."""


class RunsNotOpenError(YieldLabError):
    """Runs are not permitted yet (week 0 is setup only)."""


class SnapshotError(YieldLabError, RuntimeError):
    """Snapshot file is missing, truncated, or otherwise unreadable."""


class CollinearityError(YieldLabError, ValueError):
    """Design matrix is rank deficient. Carries the aliased term names."""

    def __init__(self, terms, message: str):
        super().__init__(message)
        self.terms = list(terms)


class ZeroGradientError(YieldLabError):
    """First-order fit has a zero coefficient vector; no ascent direction exists."""


class GPFitError(YieldLabError, RuntimeError):
    """Gaussian-process fit failed (covariance factorization did not succeed)."""
