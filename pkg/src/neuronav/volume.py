"""Voxel volumes in Hounsfield units: assembly from slices and a raw sidecar format.

Index convention: ``samples[k, j, i]`` with i along the image row direction
(column index), j along the image column direction (row index), k across
slices. World position of voxel (i,j,k) is
``origin + orientation @ (i*sx, j*sy, k*sz)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dicom import SliceRecord
from .errors import (
    HeaderParseError,
    InconsistentGeometry,
    LengthMismatch,
    NonUniformSpacing,
    TooFewSlices,
)

HU_MIN = -1024.0
HU_MAX = 4000.0

_GEOM_TOL = 1e-6


@dataclass(frozen=True)
class VoxelVolume:
    """3D grid of HU scalars with physical spacing, origin and orientation."""

    dims: tuple[int, int, int]  # (nx, ny, nz)
    spacing: tuple[float, float, float]  # mm
    origin: tuple[float, float, float]  # mm
    orientation: np.ndarray  # 3x3 direction cosines, columns = (x, y, z axes)
    samples: np.ndarray  # float32, shape (nz, ny, nx)

    def __post_init__(self):
        nx, ny, nz = self.dims
        if min(self.spacing) <= 0:
            raise ValueError("spacing components must be positive")
        o = np.asarray(self.orientation, dtype=float)
        if o.shape != (3, 3):
            raise ValueError("orientation must be 3x3")
        if not np.allclose(o.T @ o, np.eye(3), atol=_GEOM_TOL):
            raise ValueError("orientation must be orthonormal")
        if abs(np.linalg.det(o) - 1.0) > _GEOM_TOL:
            raise ValueError("orientation must have determinant +1")
        if self.samples.shape != (nz, ny, nx):
            raise ValueError(
                f"samples shape {self.samples.shape} != (nz,ny,nx)={(nz, ny, nx)}")
        object.__setattr__(self, "orientation", o)

    @property
    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    def index_to_world(self, ijk) -> np.ndarray:
        """Map fractional voxel indices (..., 3) as (i,j,k) to patient mm."""
        ijk = np.asarray(ijk, dtype=float)
        scaled = ijk * np.asarray(self.spacing)
        return scaled @ self.orientation.T + np.asarray(self.origin)


def assemble_volume(slices: list[SliceRecord]) -> VoxelVolume:
    """Order slices along their normal and rescale raw pixels to HU.

    The slice gap must be uniform to 1%; the volume z spacing is the median
    adjacent gap. HU values are clipped to [-1024, 4000] after rescale.
    """
    if len(slices) < 2:
        raise TooFewSlices(f"{len(slices)} slice(s), need at least 2")

    first = slices[0]
    for s in slices[1:]:
        if s.rows != first.rows or s.cols != first.cols:
            raise InconsistentGeometry("slices differ in rows/cols")
        if not np.allclose(s.pixel_spacing, first.pixel_spacing, atol=_GEOM_TOL):
            raise InconsistentGeometry("slices differ in pixel spacing")
        if not (np.allclose(s.row_cosines, first.row_cosines, atol=_GEOM_TOL)
                and np.allclose(s.col_cosines, first.col_cosines, atol=_GEOM_TOL)):
            raise InconsistentGeometry("slices differ in orientation")

    ordered = sorted(slices, key=lambda s: s.position_along_normal)
    positions = np.array([s.position_along_normal for s in ordered])
    gaps = np.diff(positions)
    sz = float(np.median(gaps))
    if sz <= 0 or np.any(np.abs(gaps - sz) > 0.01 * sz):
        raise NonUniformSpacing(f"gaps {gaps} deviate more than 1% from median {sz}")

    stack = np.empty((len(ordered), first.rows, first.cols), dtype=np.float32)
    for k, s in enumerate(ordered):
        hu = s.raw_pixels.astype(np.float32) * np.float32(s.rescale_slope) \
            + np.float32(s.rescale_intercept)
        stack[k] = np.clip(hu, HU_MIN, HU_MAX)

    normal = first.slice_normal
    orientation = np.column_stack([first.row_cosines, first.col_cosines, normal])
    return VoxelVolume(
        dims=(first.cols, first.rows, len(ordered)),
        spacing=(first.pixel_spacing[1], first.pixel_spacing[0], sz),
        origin=tuple(ordered[0].image_position),
        orientation=orientation,
        samples=stack,
    )


# --- raw sidecar format ----------------------------------------------------
#
# UTF-8 header lines "key: value", a blank line, then int16 little-endian
# samples in z-major order. The canonical test/phantom format.

_RAW_DTYPE = "int16le"


def write_raw_volume(volume: VoxelVolume) -> tuple[str, bytes]:
    """Serialize to (header text, sample bytes). Samples quantize to int16."""
    nx, ny, nz = volume.dims
    o = volume.orientation.reshape(-1)
    header = (
        f"dims: {nx} {ny} {nz}\n"
        f"spacing: {_fmt_floats(volume.spacing)}\n"
        f"origin: {_fmt_floats(volume.origin)}\n"
        f"orientation: {_fmt_floats(o)}\n"
        f"dtype: {_RAW_DTYPE}\n"
    )
    data = np.rint(volume.samples).astype("<i2").tobytes()
    return header, data


def read_raw_volume(header: str, data: bytes) -> VoxelVolume:
    """Parse a raw-volume header + sample bytes. No rescale: values are HU."""
    fields: dict[str, str] = {}
    for lineno, line in enumerate(header.splitlines(), start=1):
        if not line.strip():
            continue
        if ":" not in line:
            raise HeaderParseError(f"line {lineno}: expected 'key: value'")
        key, _, value = line.partition(":")
        fields[key.strip().lower()] = value.strip()

    for key in ("dims", "spacing", "origin", "orientation", "dtype"):
        if key not in fields:
            raise HeaderParseError(f"missing header key '{key}'")
    if fields["dtype"] != _RAW_DTYPE:
        raise HeaderParseError(f"unsupported dtype '{fields['dtype']}'")

    try:
        dims = tuple(int(x) for x in fields["dims"].split())
        spacing = tuple(float(x) for x in fields["spacing"].split())
        origin = tuple(float(x) for x in fields["origin"].split())
        orient = [float(x) for x in fields["orientation"].split()]
    except ValueError as e:
        raise HeaderParseError(str(e)) from e
    if len(dims) != 3 or len(spacing) != 3 or len(origin) != 3 or len(orient) != 9:
        raise HeaderParseError("dims/spacing/origin need 3 values, orientation needs 9")
    if min(dims) < 1:
        raise HeaderParseError("dims must be positive")

    nx, ny, nz = dims
    expected = 2 * nx * ny * nz
    if len(data) != expected:
        raise LengthMismatch(f"{len(data)} sample bytes, expected {expected}")
    samples = np.frombuffer(data, dtype="<i2").astype(np.float32).reshape(nz, ny, nx)

    try:
        return VoxelVolume(
            dims=dims,
            spacing=spacing,
            origin=origin,
            orientation=np.array(orient, dtype=float).reshape(3, 3),
            samples=samples,
        )
    except ValueError as e:
        raise HeaderParseError(str(e)) from e


def save_raw_volume(path: str | Path, volume: VoxelVolume) -> None:
    """Write the single-file sidecar: header, blank line, samples."""
    header, data = write_raw_volume(volume)
    with open(path, "wb") as f:
        f.write(header.encode("utf-8"))
        f.write(b"\n")
        f.write(data)


def load_raw_volume(path: str | Path) -> VoxelVolume:
    with open(path, "rb") as f:
        blob = f.read()
    return parse_raw_volume_bytes(blob)


def parse_raw_volume_bytes(blob: bytes) -> VoxelVolume:
    """Split a sidecar byte blob at the blank line and parse it."""
    sep = blob.find(b"\n\n")
    if sep < 0:
        raise HeaderParseError("no blank line separating header from samples")
    header = blob[:sep + 1].decode("utf-8", errors="replace")
    return read_raw_volume(header, blob[sep + 2:])


def _fmt_floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)
