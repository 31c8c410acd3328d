"""Exception hierarchy shared by every module.

All library errors derive from :class:`TokinferError` so the CLI can map
them to exit code 1 without catching unrelated exceptions.
"""


class TokinferError(Exception):
    """Base class for structured library errors."""


class ConfigurationError(TokinferError):
    """Inconsistent or unsupported configuration (method, flags, resources)."""


class MalformedSegmentationError(TokinferError):
    pass


class NoSegmentationError(TokinferError):
    """A pretoken cannot be covered by vocabulary tokens."""

    def __init__(self, surface: str, offset: int, method: str = ""):
        self.surface = surface
        self.offset = offset
        self.method = method
        where = f" ({method})" if method else ""
        super().__init__(
            f"no segmentation{where} for {surface!r}: "
            f"unmatchable character {surface[offset]!r} at offset {offset}"
        )


class InvalidSymbolError(TokinferError):
    pass


class ParseError(TokinferError):
    """Malformed input file. ``line`` is 0-based where applicable."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class ConsistencyError(TokinferError):
    pass


class DataError(TokinferError):
    pass


class CorpusDecodeError(DataError):
    def __init__(self, path, byte_offset: int, reason: str = "invalid UTF-8"):
        self.path = str(path)
        self.byte_offset = byte_offset
        super().__init__(f"{path}: {reason} at byte offset {byte_offset}")


class AlignmentError(TokinferError):
    pass


class UndefinedCorrelationError(TokinferError):
    pass


class BenchmarkDataError(TokinferError):
    pass


class EmptyCorpusError(TokinferError):
    pass
