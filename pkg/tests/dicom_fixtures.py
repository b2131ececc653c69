"""Byte-level DICOM fixture encoder, written straight from the Explicit
VR Little Endian element layout. Deliberately independent of the parser:
it only uses struct.pack, so it serves as the authoring oracle for the
reader tests."""

import struct

import numpy as np

TRANSFER_SYNTAX_EXPLICIT_LE = "1.2.840.10008.1.2.1"


def _element(group: int, elem: int, vr: str, value: bytes) -> bytes:
    if len(value) % 2:
        value += b"\x00" if vr != "UI" else b"\x00"
    head = struct.pack("<HH", group, elem) + vr.encode("ascii")
    if vr in ("OB", "OW", "OF", "OD", "OL", "OV", "SQ", "UC", "UR", "UT", "UN"):
        return head + b"\x00\x00" + struct.pack("<I", len(value)) + value
    return head + struct.pack("<H", len(value)) + value


def _ds(*values) -> bytes:
    return "\\".join(repr(float(v)) for v in values).encode("ascii")


def _us(value: int) -> bytes:
    return struct.pack("<H", value)


def encode_slice(rows=4, cols=4, pixel_spacing=(1.0, 1.0),
                 position=(0.0, 0.0, 0.0),
                 orientation=(1.0, 0.0, 0.0, 0.0, 1.0, 0.0),
                 slope=1.0, intercept=-1024.0,
                 pixels=None,
                 transfer_syntax=TRANSFER_SYNTAX_EXPLICIT_LE,
                 include_magic=True,
                 pixel_bytes_override=None,
                 extra_tail=b"",
                 omit_tags=()) -> bytes:
    """Assemble one Explicit-VR-LE slice file as raw bytes."""
    if pixels is None:
        pixels = np.zeros((rows, cols), dtype=np.int16)
    pixels = np.asarray(pixels, dtype="<i2")

    out = bytearray(b"\x00" * 128)
    out += b"DICM" if include_magic else b"XXXX"

    if "transfer_syntax" not in omit_tags:
        out += _element(0x0002, 0x0010, "UI", transfer_syntax.encode("ascii"))
    # a couple of ordinary tags the parser must skip by length
    out += _element(0x0008, 0x0060, "CS", b"CT")
    out += _element(0x0008, 0x0070, "LO", b"synthetic fixture")

    if "image_position" not in omit_tags:
        out += _element(0x0020, 0x0032, "DS", _ds(*position))
    if "image_orientation" not in omit_tags:
        out += _element(0x0020, 0x0037, "DS", _ds(*orientation))
    if "rows" not in omit_tags:
        out += _element(0x0028, 0x0010, "US", _us(rows))
    if "cols" not in omit_tags:
        out += _element(0x0028, 0x0011, "US", _us(cols))
    if "pixel_spacing" not in omit_tags:
        out += _element(0x0028, 0x0030, "DS", _ds(*pixel_spacing))
    if "bits_allocated" not in omit_tags:
        out += _element(0x0028, 0x0100, "US", _us(16))
    if "rescale_intercept" not in omit_tags:
        out += _element(0x0028, 0x1052, "DS", _ds(intercept))
    if "rescale_slope" not in omit_tags:
        out += _element(0x0028, 0x1053, "DS", _ds(slope))

    if "pixel_data" not in omit_tags:
        payload = pixels.tobytes() if pixel_bytes_override is None else pixel_bytes_override
        out += _element(0x7FE0, 0x0010, "OW", payload)

    out += extra_tail
    return bytes(out)
