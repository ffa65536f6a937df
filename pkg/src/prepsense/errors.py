"""Exception types shared across the platform."""


class PrepsenseError(Exception):
    """Base class for all platform errors."""


class FormatError(PrepsenseError):
    """Malformed text, record, or file content."""


class InventoryError(PrepsenseError):
    """An identifier is not in the configured label inventory."""


class ValidationError(PrepsenseError):
    """Input violates a contract invariant."""


class DomainError(PrepsenseError):
    """Mathematically invalid operand (zero vector, empty tally, ...)."""


class CoverageError(PrepsenseError):
    """No training material covers the requested key."""


class ProviderError(PrepsenseError):
    """A vector provider failed or returned malformed output."""


class AuthError(PrepsenseError):
    """Unknown worker or bad credentials."""


class StaleAssignmentError(PrepsenseError):
    """The assignment being answered is no longer open."""


class CorruptLogError(PrepsenseError):
    """The event log has a gap or is otherwise inconsistent."""


class StageError(PrepsenseError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: str):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
