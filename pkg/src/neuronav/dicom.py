"""Bounded DICOM reader: Explicit VR Little Endian, uncompressed 16-bit CT slices.

Only the handful of tags needed to geometrically assemble a CT stack are
decoded; everything else is skipped by its declared length. Parsing stops
once Pixel Data has been consumed, so trailing bytes never affect the result.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import MissingMagic, MissingTag, PixelLengthMismatch, UnsupportedTransferSyntax

PREAMBLE_LEN = 128
MAGIC = b"DICM"
EXPLICIT_VR_LITTLE_ENDIAN = "1.2.840.10008.1.2.1"

TAG_TRANSFER_SYNTAX = (0x0002, 0x0010)
TAG_ROWS = (0x0028, 0x0010)
TAG_COLS = (0x0028, 0x0011)
TAG_PIXEL_SPACING = (0x0028, 0x0030)
TAG_IMAGE_POSITION = (0x0020, 0x0032)
TAG_IMAGE_ORIENTATION = (0x0020, 0x0037)
TAG_RESCALE_INTERCEPT = (0x0028, 0x1052)
TAG_RESCALE_SLOPE = (0x0028, 0x1053)
TAG_BITS_ALLOCATED = (0x0028, 0x0100)
TAG_PIXEL_DATA = (0x7FE0, 0x0010)

_REQUIRED = {
    TAG_ROWS: "Rows",
    TAG_COLS: "Columns",
    TAG_PIXEL_SPACING: "Pixel Spacing",
    TAG_IMAGE_POSITION: "Image Position (Patient)",
    TAG_IMAGE_ORIENTATION: "Image Orientation (Patient)",
    TAG_RESCALE_INTERCEPT: "Rescale Intercept",
    TAG_RESCALE_SLOPE: "Rescale Slope",
    TAG_BITS_ALLOCATED: "Bits Allocated",
    TAG_PIXEL_DATA: "Pixel Data",
}

# VRs that carry 2 reserved bytes + 32-bit length in Explicit VR encoding.
_LONG_VRS = {b"OB", b"OW", b"OF", b"OD", b"OL", b"OV", b"SQ", b"UC", b"UR", b"UT", b"UN"}

_ITEM_DELIM = (0xFFFE, 0xE00D)
_SEQ_DELIM = (0xFFFE, 0xE0DD)


@dataclass(frozen=True)
class SliceRecord:
    """One CT slice: geometry plus raw (unrescaled) 16-bit pixels."""

    rows: int
    cols: int
    pixel_spacing: tuple[float, float]  # (row_mm, col_mm)
    image_position: tuple[float, float, float]
    row_cosines: tuple[float, float, float]
    col_cosines: tuple[float, float, float]
    rescale_slope: float
    rescale_intercept: float
    raw_pixels: np.ndarray  # int16, shape (rows, cols)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if self.pixel_spacing[0] <= 0 or self.pixel_spacing[1] <= 0:
            raise ValueError("pixel spacing must be positive")
        n = np.linalg.norm(self.slice_normal)
        if abs(n - 1.0) >= 1e-6:
            raise ValueError("slice normal is not unit length")
        if self.raw_pixels.size != self.rows * self.cols:
            raise ValueError("raw_pixels size != rows * cols")

    @property
    def slice_normal(self) -> np.ndarray:
        """Unit normal of the slice plane (row x col direction cosines)."""
        return np.cross(np.asarray(self.row_cosines, float), np.asarray(self.col_cosines, float))

    @property
    def position_along_normal(self) -> float:
        return float(np.dot(self.image_position, self.slice_normal))


class _Reader:
    """Cursor over the element stream; every read is bounds-checked."""

    def __init__(self, data: bytes, offset: int):
        self.data = data
        self.pos = offset

    def at_end(self) -> bool:
        return self.pos + 8 > len(self.data)

    def read_element(self):
        """Return (tag, vr, value_bytes) for the next element, or None on truncation."""
        d, p = self.data, self.pos
        if p + 8 > len(d):
            return None
        group, elem = struct.unpack_from("<HH", d, p)
        p += 4
        tag = (group, elem)
        if tag in (_ITEM_DELIM, _SEQ_DELIM) or tag == (0xFFFE, 0xE000):
            # Item framing carries a bare 32-bit length, no VR.
            (length,) = struct.unpack_from("<I", d, p)
            p += 4
            self.pos = p
            return tag, b"", self._take(length) if length != 0xFFFFFFFF else b""
        vr = d[p:p + 2]
        p += 2
        if vr in _LONG_VRS:
            if p + 6 > len(d):
                return None
            (length,) = struct.unpack_from("<I", d, p + 2)
            p += 6
        else:
            if p + 2 > len(d):
                return None
            (length,) = struct.unpack_from("<H", d, p)
            p += 2
        self.pos = p
        if length == 0xFFFFFFFF:
            if vr == b"SQ":
                self._skip_undefined_sequence()
                return tag, vr, None
            raise UnsupportedTransferSyntax(
                f"undefined-length element ({group:04X},{elem:04X}) outside a sequence")
        return tag, vr, self._take(length)

    def _take(self, length: int) -> bytes | None:
        if self.pos + length > len(self.data):
            return None
        out = self.data[self.pos:self.pos + length]
        self.pos += length
        return out

    def _skip_undefined_sequence(self):
        """Advance past a length-undefined SQ by scanning item framing."""
        depth = 1
        while depth > 0:
            if self.pos + 8 > len(self.data):
                raise UnsupportedTransferSyntax("truncated undefined-length sequence")
            group, elem = struct.unpack_from("<HH", self.data, self.pos)
            (length,) = struct.unpack_from("<I", self.data, self.pos + 4)
            self.pos += 8
            tag = (group, elem)
            if tag == _SEQ_DELIM:
                depth -= 1
            elif tag == (0xFFFE, 0xE000):
                if length != 0xFFFFFFFF:
                    self.pos += length
            elif length != 0xFFFFFFFF:
                self.pos += length


def _decode_us(raw: bytes, tag) -> int:
    if raw is None or len(raw) < 2:
        raise MissingTag(tag, _REQUIRED.get(tag, ""))
    return struct.unpack_from("<H", raw)[0]


def _decode_ds(raw: bytes, tag, count: int) -> list[float]:
    if raw is None:
        raise MissingTag(tag, _REQUIRED.get(tag, ""))
    parts = raw.decode("ascii", errors="replace").strip("\x00 ").split("\\")
    if len(parts) != count:
        raise MissingTag(tag, _REQUIRED.get(tag, ""))
    return [float(p) for p in parts]


def parse_dicom_slice(data: bytes) -> SliceRecord:
    """Parse one Explicit-VR-LE CT slice into a SliceRecord.

    Raw pixel values are kept as stored; rescale to HU happens at volume
    assembly. Raises MissingMagic, UnsupportedTransferSyntax, MissingTag,
    or PixelLengthMismatch.
    """
    if len(data) < PREAMBLE_LEN + 4 or data[PREAMBLE_LEN:PREAMBLE_LEN + 4] != MAGIC:
        raise MissingMagic("no DICM magic at offset 128")

    reader = _Reader(data, PREAMBLE_LEN + 4)
    found: dict[tuple[int, int], bytes] = {}
    transfer_syntax = None
    while not reader.at_end():
        item = reader.read_element()
        if item is None:
            break  # truncated element: report missing tags below
        tag, _vr, value = item
        if tag == TAG_TRANSFER_SYNTAX and value is not None:
            transfer_syntax = value.decode("ascii", errors="replace").strip("\x00 ")
            if transfer_syntax != EXPLICIT_VR_LITTLE_ENDIAN:
                raise UnsupportedTransferSyntax(transfer_syntax)
        elif tag in _REQUIRED:
            if value is None:
                break
            found[tag] = value
            if tag == TAG_PIXEL_DATA:
                break  # trailing bytes are deliberately ignored

    if transfer_syntax is None:
        raise MissingTag(TAG_TRANSFER_SYNTAX, "Transfer Syntax UID")
    for tag, name in _REQUIRED.items():
        if tag not in found:
            raise MissingTag(tag, name)

    bits = _decode_us(found[TAG_BITS_ALLOCATED], TAG_BITS_ALLOCATED)
    if bits != 16:
        raise UnsupportedTransferSyntax(f"Bits Allocated {bits} unsupported (16 only)")

    rows = _decode_us(found[TAG_ROWS], TAG_ROWS)
    cols = _decode_us(found[TAG_COLS], TAG_COLS)
    spacing = _decode_ds(found[TAG_PIXEL_SPACING], TAG_PIXEL_SPACING, 2)
    position = _decode_ds(found[TAG_IMAGE_POSITION], TAG_IMAGE_POSITION, 3)
    orient = _decode_ds(found[TAG_IMAGE_ORIENTATION], TAG_IMAGE_ORIENTATION, 6)
    intercept = _decode_ds(found[TAG_RESCALE_INTERCEPT], TAG_RESCALE_INTERCEPT, 1)[0]
    slope = _decode_ds(found[TAG_RESCALE_SLOPE], TAG_RESCALE_SLOPE, 1)[0]

    pixel_bytes = found[TAG_PIXEL_DATA]
    if len(pixel_bytes) != 2 * rows * cols:
        raise PixelLengthMismatch(
            f"pixel data is {len(pixel_bytes)} bytes, expected {2 * rows * cols}")
    pixels = np.frombuffer(pixel_bytes, dtype="<i2").reshape(rows, cols)

    return SliceRecord(
        rows=rows,
        cols=cols,
        pixel_spacing=(spacing[0], spacing[1]),
        image_position=tuple(position),
        row_cosines=tuple(orient[0:3]),
        col_cosines=tuple(orient[3:6]),
        rescale_slope=slope,
        rescale_intercept=intercept,
        raw_pixels=pixels,
    )
