"""Exception hierarchy shared by all percut modules."""


class PercutError(Exception):
    """Base class for every error raised deliberately by this package."""


class ParseError(PercutError):
    """Malformed input text; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphStructureError(PercutError):
    """Graph violates a structural requirement (loop, duplicate, disconnected)."""


class PreconditionError(PercutError):
    """An operation was called outside its documented domain."""


class CapExceededError(PercutError):
    """An enumeration or simulation exceeded its hard size/step cap."""


class NumericalError(PercutError):
    """A linear solve or factorization failed its residual requirement."""


class TheoremViolationError(PercutError):
    """A mathematically guaranteed inequality or identity failed.

    Raising this signals an implementation bug, never bad user input;
    the command line maps it to exit code 2.
    """
