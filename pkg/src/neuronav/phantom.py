"""Synthetic head phantoms with exact ground-truth masks.

An ellipsoidal bone shell encloses brain-tissue HU with two CSF-range
ellipsoids (the lateral ventricles). Every voxel class comes from an
analytic inequality, so segmentation output can be compared against the
truth voxel-for-voxel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .segmentation import LabelMask
from .volume import VoxelVolume

HU_AIR = -1000.0
HU_CSF = 5.0
HU_BRAIN = 40.0
HU_BONE = 1000.0


@dataclass(frozen=True)
class HeadPhantom:
    volume: VoxelVolume
    skull_truth: LabelMask
    ventricle_truth: LabelMask


def _ellipsoid_r2(coords, center_mm, semi_axes_mm):
    """Normalized squared radius field: <=1 inside the ellipsoid."""
    zz, yy, xx = coords
    return (((xx - center_mm[0]) / semi_axes_mm[0]) ** 2
            + ((yy - center_mm[1]) / semi_axes_mm[1]) ** 2
            + ((zz - center_mm[2]) / semi_axes_mm[2]) ** 2)


def head_phantom(dims=(64, 64, 64), spacing=(1.0, 1.0, 1.0),
                 shell_outer_frac=(0.82, 0.86, 0.80), shell_thickness_mm=4.0,
                 ventricle_frac=(0.14, 0.34, 0.22), ventricle_sep_frac=0.28,
                 noise_hu: float = 0.0, seed: int = 0,
                 open_skull: bool = False) -> HeadPhantom:
    """Build a shell-plus-ventricles phantom on the given grid.

    Fractions are relative to the half-extent of the volume. With
    open_skull=True the top half of the shell is removed, so the interior
    leaks to the outside (for OpenSkull testing). Optional uniform noise
    of +/- noise_hu is added (seeded).
    """
    nx, ny, nz = dims
    sx, sy, sz = spacing
    extent = np.array([nx * sx, ny * sy, nz * sz])
    center = (extent - np.array(spacing)) / 2.0

    zz, yy, xx = np.meshgrid(
        np.arange(nz) * sz, np.arange(ny) * sy, np.arange(nx) * sx,
        indexing="ij", sparse=True)
    coords = (zz, yy, xx)

    outer_axes = np.array(shell_outer_frac) * extent / 2.0
    inner_axes = outer_axes - shell_thickness_mm
    if np.any(inner_axes <= 0):
        raise ValueError("shell thickness exceeds the head radius")

    r2_outer = _ellipsoid_r2(coords, center, outer_axes)
    r2_inner = _ellipsoid_r2(coords, center, inner_axes)
    shell = (r2_outer <= 1.0) & (r2_inner > 1.0)
    interior = r2_inner <= 1.0
    if open_skull:
        shell = shell & ~(coords[0] > center[2])  # strip the top hemisphere

    vent_axes = np.array(ventricle_frac) * extent / 2.0
    sep = ventricle_sep_frac * extent[0] / 2.0
    left = _ellipsoid_r2(coords, center - np.array([sep, 0, 0]), vent_axes) <= 1.0
    right = _ellipsoid_r2(coords, center + np.array([sep, 0, 0]), vent_axes) <= 1.0
    ventricles = (left | right) & interior & ~shell

    samples = np.full((nz, ny, nx), HU_AIR, dtype=np.float32)
    samples[interior] = HU_BRAIN
    samples[ventricles] = HU_CSF
    samples[shell] = HU_BONE
    if noise_hu > 0:
        rng = np.random.default_rng(seed)
        samples = samples + rng.uniform(-noise_hu, noise_hu,
                                        size=samples.shape).astype(np.float32)

    volume = VoxelVolume(dims=dims, spacing=spacing, origin=(0.0, 0.0, 0.0),
                         orientation=np.eye(3), samples=samples)
    return HeadPhantom(
        volume=volume,
        skull_truth=LabelMask(dims=dims, bits=shell),
        ventricle_truth=LabelMask(dims=dims, bits=ventricles),
    )


def sphere_mask(dims, center_vox, radius_vox) -> LabelMask:
    """Voxel centers within radius of the center (analytic sphere)."""
    nx, ny, nz = dims
    zz, yy, xx = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx),
                             indexing="ij", sparse=True)
    r2 = ((xx - center_vox[0]) ** 2 + (yy - center_vox[1]) ** 2
          + (zz - center_vox[2]) ** 2)
    return LabelMask(dims=dims, bits=r2 <= radius_vox ** 2)


def phantom_slices(phantom_volume: VoxelVolume, slope: float = 1.0,
                   intercept: float = -1024.0):
    """Decompose a volume into SliceRecord objects (inverse of assembly).

    Used to exercise the slice-assembly path with synthetic data; raw
    values are chosen so that raw*slope + intercept reproduces the HU.
    """
    from .dicom import SliceRecord

    nx, ny, nz = phantom_volume.dims
    o = phantom_volume.orientation
    records = []
    for k in range(nz):
        hu = phantom_volume.samples[k]
        raw = np.rint((hu - intercept) / slope).astype(np.int16)
        pos = phantom_volume.index_to_world((0.0, 0.0, float(k)))
        records.append(SliceRecord(
            rows=ny, cols=nx,
            pixel_spacing=(phantom_volume.spacing[1], phantom_volume.spacing[0]),
            image_position=tuple(pos),
            row_cosines=tuple(o[:, 0]),
            col_cosines=tuple(o[:, 1]),
            rescale_slope=slope,
            rescale_intercept=intercept,
            raw_pixels=raw,
        ))
    return records
