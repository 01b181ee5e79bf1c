"""Exception types shared across the package."""


class RefaggError(Exception):
    pass


class IncompatibleConfigError(RefaggError, ValueError):
    """Raised when two feature objects were built with different metric settings."""


class InvalidStrategyError(RefaggError, ValueError):
    pass


class SegmentError(RefaggError):
    """Wraps a failure raised while processing one segment."""

    def __init__(self, segment_id, message):
        super().__init__(f"segment {segment_id!r}: {message}")
        self.segment_id = segment_id


class StoreFormatError(RefaggError, ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
