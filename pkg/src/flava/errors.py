"""Exception types shared across the annotation suite.

Every error that callers are expected to catch has its own class so that
service and CLI layers can map them to status codes / exit codes without
string matching.
"""


class FlavaError(Exception):
    """Base class for all errors raised by this package."""


# --- file / parse errors -------------------------------------------------

class MissingFileError(FlavaError):
    pass


class MalformedLengthError(FlavaError):
    """Binary cloud file length is not a multiple of the record size."""


class NonFiniteValueError(FlavaError):
    """A point record contains NaN or Inf (strict loading mode)."""

    def __init__(self, record_index: int):
        super().__init__(f"non-finite value in point record {record_index}")
        self.record_index = record_index


class MissingKeyError(FlavaError):
    pass


class WrongValueCountError(FlavaError):
    pass


class NonOrthonormalRotationError(FlavaError):
    pass


class MalformedLineError(FlavaError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class UnknownCategoryError(FlavaError):
    pass


class SchemaVersionMismatchError(FlavaError):
    pass


class CorruptArchiveError(FlavaError):
    pass


# --- geometry errors -----------------------------------------------------

class BehindCameraError(FlavaError):
    """Point (or all box vertices) lies behind the image plane."""

    def __init__(self, depth: float):
        super().__init__(f"point behind camera (depth {depth:.6g} m)")
        self.depth = depth


class AllBehindCameraError(FlavaError):
    pass


# --- annotation engine errors --------------------------------------------

class DegenerateFootprintError(FlavaError):
    pass


class InsufficientPointsError(FlavaError):
    pass


class ZeroHeightError(FlavaError):
    pass


class DegenerateResultError(FlavaError):
    """An edit would shrink a box dimension below the minimum size."""


class UnknownBoxError(FlavaError):
    pass


class UnknownFrameError(FlavaError):
    pass


class NothingToTransferError(FlavaError):
    pass


class HeightLockedError(FlavaError):
    """Vertical edit attempted on a box whose height is locked."""


# --- evaluation errors ----------------------------------------------------

class FrameMismatchError(FlavaError):
    """Prediction and ground-truth frame ranges do not overlap at all."""
