"""Exception types shared across the package."""


class SomsamError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatchError(SomsamError):
    """An input's dimensions do not match what a model expects."""

    def __init__(self, expected, actual, what: str = "dimension"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} mismatch: expected {expected}, got {actual}")


class DataFormatError(SomsamError):
    """A byte stream violates one of the file formats.

    `offset` is the byte position where the violation was detected.
    """

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class BadMagicError(DataFormatError):
    """The magic bytes at the start of a file are wrong."""


class BadVersionError(DataFormatError):
    """The file carries an unsupported format version."""


class TruncatedError(DataFormatError):
    """The byte stream ends before the declared content does."""


class NonFiniteError(DataFormatError):
    """A stored vector component is NaN or infinite."""


class ChecksumError(DataFormatError):
    """The trailing CRC does not match the file contents."""


class EmptyDataError(SomsamError):
    """An operation that needs at least one record received none."""


class EmptyClassifierError(SomsamError):
    """Scoring was requested before any class has been learned."""


class CounterOverflowError(SomsamError):
    """An integer-mode connection counter would exceed its 32-bit range."""
