"""Exception types shared across the package."""


class ClipAuditError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ClipAuditError):
    """A domain object or request violates one of its invariants."""


class ManifestError(ClipAuditError):
    """A ballot manifest (or replay file) failed to parse or validate.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OutOfTableError(ClipAuditError):
    """The requested (n, alpha) falls outside the reference table.

    Callers should fall back to simulation or to the upper-bound formula.
    """


class CalibrationInfeasibleError(ClipAuditError):
    """Too few trials to estimate the requested quantile (k = 0)."""


class InfiniteSampleSizeError(ClipAuditError):
    """Expected-sample-size formulas diverge at zero margin."""


class SamplingExhaustedError(ClipAuditError):
    """No eligible ballots remain to draw."""


class SessionStateError(ClipAuditError):
    """An audit-session operation was applied in an invalid state."""
