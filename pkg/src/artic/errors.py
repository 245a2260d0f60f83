"""Exception hierarchy shared by every module of :mod:`artic`."""


class ArticError(Exception):
    """Base class for all errors raised by this package."""


class InvalidAxisError(ArticError, ValueError):
    """A motion axis direction is not a unit vector (or not finite)."""


class DegenerateGeometryError(ArticError, ValueError):
    """Too few points, or points spanning less than a plane."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class EmptyInputError(ArticError, ValueError):
    """A point cloud or frame list that must be non-empty is empty."""


class FrameCountError(ArticError, ValueError):
    """Predicted and observed frame lists have different lengths."""


class NumericalFailureError(ArticError, FloatingPointError):
    """The optimizer produced a non-finite loss."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class OverDegradedError(ArticError, ValueError):
    """Degradation left too few points in a frame."""


class KindMismatchError(ArticError, ValueError):
    """Two motion axes of different kinds were compared."""


class ConstructionError(ArticError, ValueError):
    """An object template has invalid dimensions or profile."""


class PLYParseError(ArticError, ValueError):
    """Malformed PLY input. ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class FormatError(ArticError, ValueError):
    """Malformed JSON record, manifest, or unsupported format version."""
