"""Exception types raised across the pipeline.

Every error the package raises deliberately derives from NeuronavError so
callers can catch one base type at the CLI/service boundary.
"""


class NeuronavError(Exception):
    """Base class for all errors raised by this package."""


# --- CT ingestion ---------------------------------------------------------

class MissingMagic(NeuronavError):
    """Input lacks the 128-byte preamble + 'DICM' magic."""


class UnsupportedTransferSyntax(NeuronavError):
    """Transfer syntax is not Explicit VR Little Endian."""


class MissingTag(NeuronavError):
    """A required data element is absent."""

    def __init__(self, tag: tuple[int, int], name: str = ""):
        self.tag = tag
        self.name = name
        label = f"({tag[0]:04X},{tag[1]:04X})"
        super().__init__(f"missing required tag {label}" + (f" {name}" if name else ""))


class PixelLengthMismatch(NeuronavError):
    """Pixel Data length does not match 2 * rows * cols."""


class InconsistentGeometry(NeuronavError):
    """Slices disagree on rows/cols/pixel spacing/orientation."""


class NonUniformSpacing(NeuronavError):
    """Adjacent slice gaps deviate more than 1% from the median gap."""


class TooFewSlices(NeuronavError):
    """A volume needs at least two slices."""


class HeaderParseError(NeuronavError):
    """Raw-volume header is malformed."""


class LengthMismatch(NeuronavError):
    """Raw-volume payload size disagrees with the declared dims."""


# --- Segmentation ---------------------------------------------------------

class InvalidRange(NeuronavError):
    """Threshold range has lo > hi."""


class EmptySegment(NeuronavError):
    """Segmentation produced no voxels."""


class OpenSkull(NeuronavError):
    """Skull mask does not enclose an interior region."""


# --- Meshing --------------------------------------------------------------

class EmptyField(NeuronavError):
    """Mask too small to run surface extraction (dims < 2)."""


class ObjParseError(NeuronavError):
    """OBJ input could not be parsed."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class IndexOutOfRange(NeuronavError):
    """OBJ face references a vertex that does not exist."""

    def __init__(self, line: int, index: int):
        self.line = line
        self.index = index
        super().__init__(f"line {line}: vertex index {index} out of range")


# --- Registration ---------------------------------------------------------

class MarkerNotVisible(NeuronavError):
    """Marker is behind the camera, back-facing, or outside the frustum."""


class NoMarkerFound(NeuronavError):
    """No quadrilateral candidate survived detection."""


class DecodeFailed(NeuronavError):
    """A quad was found but its payload matches no rotation of the expected marker."""


class DegenerateConfiguration(NeuronavError):
    """Correspondences are rank-deficient (e.g. collinear plane points)."""


class SingularHomography(NeuronavError):
    """Homography is not invertible."""


class DivergedPose(NeuronavError):
    """Pose refinement residual kept growing under damping."""


# --- Scene ----------------------------------------------------------------

class UnknownCommand(NeuronavError):
    """Command text matches no known command."""


class MissingPose(NeuronavError):
    """Scene has no marker pose to place models with."""


class MissingMesh(NeuronavError):
    """A scene node references a mesh that is not loaded."""


# --- Pipeline / service ---------------------------------------------------

class PortInUse(NeuronavError):
    """Requested service port is already bound."""


class PipelineStageError(NeuronavError):
    """Wraps a module error with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage={stage}: {cause.__class__.__name__}: {cause}")
