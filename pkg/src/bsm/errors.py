"""Exception types raised across the package."""


class FormatError(ValueError):
    """A file is not a well-formed image / disparity / pattern file."""


class DimensionMismatch(ValueError):
    """Two inputs that must share a shape do not."""


class LengthMismatch(ValueError):
    """Bit strings of different lengths were combined."""


class EmptyRegion(ValueError):
    """An evaluation region contains no countable pixel."""
