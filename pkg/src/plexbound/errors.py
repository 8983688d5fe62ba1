"""Exception types shared across the package."""


class PlexboundError(Exception):
    """Base class for errors raised by this package."""


class EdgeListParseError(PlexboundError):
    """Malformed edge-list input; carries the 1-based offending line number."""

    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason


class TraceFormatError(PlexboundError):
    """Malformed trace file; carries the 1-based offending line number."""

    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason


class ModelFormatError(PlexboundError):
    """Model file failed schema or bounds validation."""


class DegenerateTraceError(PlexboundError):
    """Training data collection produced only one label class."""


class NoModelError(PlexboundError):
    """Solver budget exhausted before any positive-feasible model was found."""


class UnsupportedProblemError(PlexboundError):
    """Problem shape outside what the internal solver handles."""
