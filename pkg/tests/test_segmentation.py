import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuronav.errors import EmptySegment, InvalidRange, OpenSkull
from neuronav.phantom import head_phantom
from neuronav.segmentation import (
    LabelMask,
    SegmentationConfig,
    connected_components,
    dice_coefficient,
    morphology,
    segment_skull,
    segment_ventricles,
    threshold_mask,
)
from neuronav.volume import VoxelVolume


def make_volume(samples):
    samples = np.asarray(samples, dtype=np.float32)
    nz, ny, nx = samples.shape
    return VoxelVolume(dims=(nx, ny, nz), spacing=(1, 1, 1), origin=(0, 0, 0),
                       orientation=np.eye(3), samples=samples)


def mask_of(bits):
    bits = np.asarray(bits, dtype=bool)
    nz, ny, nx = bits.shape
    return LabelMask(dims=(nx, ny, nz), bits=bits)


# --- threshold --------------------------------------------------------------


def test_threshold_empty_and_full():
    vol = make_volume(np.full((3, 3, 3), -1024.0))
    assert threshold_mask(vol, 0, 100).voxel_count_true == 0
    vol2 = make_volume(np.full((3, 3, 3), 500.0))
    assert threshold_mask(vol2, 300, 4000).voxel_count_true == 27


def test_threshold_invalid_range():
    vol = make_volume(np.zeros((2, 2, 2)))
    with pytest.raises(InvalidRange):
        threshold_mask(vol, 10, 0)


def test_threshold_matches_per_voxel_scan():
    rng = np.random.default_rng(0)
    samples = rng.uniform(-100, 150, size=(8, 8, 8)).astype(np.float32)
    vol = make_volume(samples)
    got = threshold_mask(vol, 0, 50).bits
    # independent voxelwise oracle
    expect = np.zeros_like(got)
    for k in range(8):
        for j in range(8):
            for i in range(8):
                expect[k, j, i] = 0 <= samples[k, j, i] <= 50
    assert np.array_equal(got, expect)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_threshold_monotone_in_bounds(seed):
    rng = np.random.default_rng(seed)
    samples = rng.uniform(-50, 50, size=(5, 5, 5)).astype(np.float32)
    vol = make_volume(samples)
    lo1, lo2 = sorted(rng.uniform(-50, 0, size=2))
    hi1, hi2 = sorted(rng.uniform(0, 50, size=2))
    inner = threshold_mask(vol, lo2, hi1).bits
    wider_hi = threshold_mask(vol, lo2, hi2).bits
    wider_lo = threshold_mask(vol, lo1, hi1).bits
    assert not np.any(inner & ~wider_hi)
    assert not np.any(inner & ~wider_lo)


# --- connected components ----------------------------------------------------


def brute_force_components(bits, connectivity):
    """Flood fill from every unvisited voxel; independent of scipy."""
    if connectivity == 6:
        neigh = [(0, 0, 1), (0, 0, -1), (0, 1, 0), (0, -1, 0), (1, 0, 0), (-1, 0, 0)]
    else:
        neigh = [(dz, dy, dx) for dz in (-1, 0, 1) for dy in (-1, 0, 1)
                 for dx in (-1, 0, 1) if (dz, dy, dx) != (0, 0, 0)]
    seen = np.zeros_like(bits)
    comps = []
    nz, ny, nx = bits.shape
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                if not bits[k, j, i] or seen[k, j, i]:
                    continue
                stack = [(k, j, i)]
                seen[k, j, i] = True
                comp = np.zeros_like(bits)
                while stack:
                    z, y, x = stack.pop()
                    comp[z, y, x] = True
                    for dz, dy, dx in neigh:
                        z2, y2, x2 = z + dz, y + dy, x + dx
                        if (0 <= z2 < nz and 0 <= y2 < ny and 0 <= x2 < nx
                                and bits[z2, y2, x2] and not seen[z2, y2, x2]):
                            seen[z2, y2, x2] = True
                            stack.append((z2, y2, x2))
                comps.append(comp)
    return comps


def test_components_empty():
    assert connected_components(mask_of(np.zeros((3, 3, 3), bool))) == []


def test_components_two_isolated_voxels():
    bits = np.zeros((4, 4, 4), bool)
    bits[0, 0, 0] = True
    bits[3, 3, 3] = True
    parts = connected_components(mask_of(bits), connectivity=6)
    assert len(parts) == 2
    assert all(p.voxel_count_true == 1 for p in parts)
    # tie on size: lowest linear index first
    assert parts[0].bits[0, 0, 0]


@pytest.mark.parametrize("connectivity", [6, 26])
def test_components_match_brute_force(connectivity):
    rng = np.random.default_rng(1)
    for _ in range(5):
        bits = rng.random((6, 6, 6)) < 0.35
        got = connected_components(mask_of(bits), connectivity)
        expect = brute_force_components(bits, connectivity)
        assert len(got) == len(expect)
        union = np.zeros_like(bits)
        for part in got:
            assert not np.any(union & part.bits)  # pairwise disjoint
            union |= part.bits
        assert np.array_equal(union, bits)  # partition covers input
        got_sets = {part.bits.tobytes() for part in got}
        expect_sets = {comp.tobytes() for comp in expect}
        assert got_sets == expect_sets
        sizes = [p.voxel_count_true for p in got]
        assert sizes == sorted(sizes, reverse=True)


# --- morphology ---------------------------------------------------------------


def brute_ball_offsets(radius, connectivity):
    span = range(-radius, radius + 1)
    offs = []
    for dz in span:
        for dy in span:
            for dx in span:
                if connectivity == 6 and abs(dz) + abs(dy) + abs(dx) <= radius:
                    offs.append((dz, dy, dx))
                elif connectivity == 26 and max(abs(dz), abs(dy), abs(dx)) <= radius:
                    offs.append((dz, dy, dx))
    return offs


def brute_dilate(bits, radius, connectivity):
    out = np.zeros_like(bits)
    nz, ny, nx = bits.shape
    for (z, y, x) in zip(*np.nonzero(bits)):
        for dz, dy, dx in brute_ball_offsets(radius, connectivity):
            z2, y2, x2 = z + dz, y + dy, x + dx
            if 0 <= z2 < nz and 0 <= y2 < ny and 0 <= x2 < nx:
                out[z2, y2, x2] = True
    return out


def brute_erode(bits, radius, connectivity):
    # grid-as-universe semantics: ball positions outside the grid are clipped
    out = np.zeros_like(bits)
    nz, ny, nx = bits.shape
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                ok = True
                for dz, dy, dx in brute_ball_offsets(radius, connectivity):
                    z2, y2, x2 = k + dz, j + dy, i + dx
                    if (0 <= z2 < nz and 0 <= y2 < ny and 0 <= x2 < nx
                            and not bits[z2, y2, x2]):
                        ok = False
                        break
                out[k, j, i] = ok
    return out


def test_morphology_radius_zero_identity():
    rng = np.random.default_rng(2)
    bits = rng.random((5, 5, 5)) < 0.5
    for op in ("erode", "dilate", "open", "close"):
        assert np.array_equal(morphology(mask_of(bits), op, 0).bits, bits)


def test_dilate_single_voxel_plus_shape():
    bits = np.zeros((5, 5, 5), bool)
    bits[2, 2, 2] = True
    out = morphology(mask_of(bits), "dilate", 1, connectivity=6).bits
    assert out.sum() == 7
    assert out[2, 2, 2] and out[1, 2, 2] and out[3, 2, 2]
    assert out[2, 1, 2] and out[2, 3, 2] and out[2, 2, 1] and out[2, 2, 3]


@pytest.mark.parametrize("connectivity", [6, 26])
@pytest.mark.parametrize("radius", [1, 2])
def test_morphology_matches_set_arithmetic(connectivity, radius):
    rng = np.random.default_rng(3)
    bits = rng.random((6, 6, 6)) < 0.5
    m = mask_of(bits)
    assert np.array_equal(morphology(m, "dilate", radius, connectivity).bits,
                          brute_dilate(bits, radius, connectivity))
    assert np.array_equal(morphology(m, "erode", radius, connectivity).bits,
                          brute_erode(bits, radius, connectivity))
    assert np.array_equal(
        morphology(m, "close", radius, connectivity).bits,
        brute_erode(brute_dilate(bits, radius, connectivity), radius, connectivity))
    assert np.array_equal(
        morphology(m, "open", radius, connectivity).bits,
        brute_dilate(brute_erode(bits, radius, connectivity), radius, connectivity))


def test_morphology_ordering_and_idempotence():
    rng = np.random.default_rng(4)
    bits = rng.random((6, 6, 6)) < 0.5
    m = mask_of(bits)
    eroded = morphology(m, "erode", 1).bits
    dilated = morphology(m, "dilate", 1).bits
    opened = morphology(m, "open", 1).bits
    closed = morphology(m, "close", 1).bits
    assert not np.any(eroded & ~bits)  # erode(m) subset of m
    assert not np.any(bits & ~dilated)  # m subset of dilate(m)
    assert not np.any(opened & ~bits)
    assert not np.any(bits & ~closed)
    assert np.array_equal(morphology(mask_of(opened), "open", 1).bits, opened)
    assert np.array_equal(morphology(mask_of(closed), "close", 1).bits, closed)


# --- skull / ventricles -------------------------------------------------------


def test_segment_skull_matches_phantom_truth():
    ph = head_phantom(dims=(64, 64, 64))
    skull = segment_skull(ph.volume, SegmentationConfig())
    assert dice_coefficient(skull, ph.skull_truth) == 1.0


def test_segment_skull_all_air_raises():
    vol = make_volume(np.full((8, 8, 8), -1000.0))
    with pytest.raises(EmptySegment):
        segment_skull(vol, SegmentationConfig())


def test_isolated_bone_voxel_excluded():
    ph = head_phantom(dims=(64, 64, 64))
    samples = ph.volume.samples.copy()
    samples[1, 1, 1] = 1500.0  # lone bone voxel far from the shell
    vol = make_volume(samples)
    skull = segment_skull(vol, SegmentationConfig())
    assert not skull.bits[1, 1, 1]
    assert dice_coefficient(skull, ph.skull_truth) == 1.0


def test_segment_ventricles_matches_phantom_truth():
    ph = head_phantom(dims=(64, 64, 64))
    cfg = SegmentationConfig()
    skull = segment_skull(ph.volume, cfg)
    vents = segment_ventricles(ph.volume, skull, cfg)
    assert dice_coefficient(vents, ph.ventricle_truth) == 1.0
    assert not np.any(vents.bits & skull.bits)


def test_noisy_phantom_dice():
    cfg = SegmentationConfig()
    ph = head_phantom(dims=(96, 96, 96), ventricle_frac=(0.2, 0.45, 0.3),
                      noise_hu=10.0, seed=5)
    skull = segment_skull(ph.volume, cfg)
    vents = segment_ventricles(ph.volume, skull, cfg)
    assert dice_coefficient(skull, ph.skull_truth) > 0.99
    assert dice_coefficient(vents, ph.ventricle_truth) > 0.95  # small grid
    assert not np.any(vents.bits & skull.bits)


def test_open_skull_detected():
    ph = head_phantom(dims=(64, 64, 64), open_skull=True)
    cfg = SegmentationConfig()
    skull = segment_skull(ph.volume, cfg)
    with pytest.raises(OpenSkull):
        segment_ventricles(ph.volume, skull, cfg)


def test_no_csf_in_range_raises():
    ph = head_phantom(dims=(48, 48, 48))
    cfg = SegmentationConfig()
    skull = segment_skull(ph.volume, cfg)
    samples = ph.volume.samples.copy()
    samples[samples == 5.0] = 40.0  # overwrite CSF with brain tissue
    vol = make_volume(samples)
    with pytest.raises(EmptySegment):
        segment_ventricles(vol, skull, cfg)


def test_min_component_filter():
    ph = head_phantom(dims=(64, 64, 64))
    cfg = SegmentationConfig(min_component_voxels=10 ** 6)
    skull = segment_skull(ph.volume, cfg)
    with pytest.raises(EmptySegment):
        segment_ventricles(ph.volume, skull, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        SegmentationConfig(csf_hu_min=20.0, csf_hu_max=10.0)
    with pytest.raises(ValueError):
        SegmentationConfig(bone_hu_min=10.0)
    with pytest.raises(ValueError):
        SegmentationConfig(connectivity=18)


def test_mask_exports_through_raw_sidecar():
    from neuronav.segmentation import mask_as_volume
    from neuronav.volume import read_raw_volume, write_raw_volume

    ph = head_phantom(dims=(24, 24, 24))
    exported = mask_as_volume(ph.ventricle_truth, ph.volume)
    header, data = write_raw_volume(exported)
    back = read_raw_volume(header, data)
    assert np.array_equal(back.samples.astype(bool), ph.ventricle_truth.bits)
    assert back.spacing == ph.volume.spacing
