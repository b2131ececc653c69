import numpy as np
import pytest

from dicom_fixtures import encode_slice
from neuronav.dicom import parse_dicom_slice
from neuronav.errors import (
    MissingMagic,
    MissingTag,
    PixelLengthMismatch,
    UnsupportedTransferSyntax,
)


def test_missing_magic_rejected():
    data = encode_slice(include_magic=False)
    with pytest.raises(MissingMagic):
        parse_dicom_slice(data)


def test_truncated_preamble_rejected():
    with pytest.raises(MissingMagic):
        parse_dicom_slice(b"\x00" * 60)


def test_small_slice_fixture_round_trip():
    pixels = np.arange(16, dtype=np.int16).reshape(4, 4) - 5
    data = encode_slice(rows=4, cols=4, pixel_spacing=(0.5, 0.75),
                        position=(10.0, -4.0, 33.25),
                        slope=1.0, intercept=-1024.0, pixels=pixels)
    rec = parse_dicom_slice(data)
    assert rec.rows == 4 and rec.cols == 4
    assert rec.pixel_spacing == (0.5, 0.75)
    assert rec.image_position == (10.0, -4.0, 33.25)
    assert rec.rescale_slope == 1.0
    assert rec.rescale_intercept == -1024.0
    assert np.array_equal(rec.raw_pixels, pixels)
    assert np.allclose(rec.slice_normal, (0, 0, 1))


def test_pixel_length_mismatch():
    data = encode_slice(rows=4, cols=4, pixel_bytes_override=b"\x00" * 30)
    with pytest.raises(PixelLengthMismatch):
        parse_dicom_slice(data)


@pytest.mark.parametrize("tag", [
    "rows", "cols", "pixel_spacing", "image_position", "image_orientation",
    "rescale_slope", "rescale_intercept", "bits_allocated", "pixel_data",
    "transfer_syntax",
])
def test_missing_required_tag(tag):
    data = encode_slice(omit_tags=(tag,))
    with pytest.raises(MissingTag):
        parse_dicom_slice(data)


def test_unsupported_transfer_syntax():
    data = encode_slice(transfer_syntax="1.2.840.10008.1.2")  # implicit VR
    with pytest.raises(UnsupportedTransferSyntax):
        parse_dicom_slice(data)


def _records_equal(a, b) -> bool:
    return (a.rows == b.rows and a.cols == b.cols
            and a.pixel_spacing == b.pixel_spacing
            and a.image_position == b.image_position
            and a.row_cosines == b.row_cosines
            and a.col_cosines == b.col_cosines
            and a.rescale_slope == b.rescale_slope
            and a.rescale_intercept == b.rescale_intercept
            and np.array_equal(a.raw_pixels, b.raw_pixels))


def test_trailing_bytes_do_not_change_result():
    pixels = np.arange(16, dtype=np.int16).reshape(4, 4)
    clean = parse_dicom_slice(encode_slice(pixels=pixels))
    rng = np.random.default_rng(9)
    for _ in range(25):
        tail = rng.integers(0, 256, size=rng.integers(1, 200)).astype(np.uint8).tobytes()
        noisy = parse_dicom_slice(encode_slice(pixels=pixels, extra_tail=tail))
        assert _records_equal(noisy, clean)


def test_oblique_orientation_normal():
    s2 = np.sqrt(0.5)
    data = encode_slice(orientation=(s2, s2, 0.0, -s2, s2, 0.0))
    rec = parse_dicom_slice(data)
    assert np.allclose(rec.slice_normal, (0, 0, 1), atol=1e-12)
    assert abs(np.linalg.norm(rec.slice_normal) - 1) < 1e-6
