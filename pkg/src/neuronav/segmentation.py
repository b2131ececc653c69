"""Skull and ventricle masks from HU volumes.

Thresholding, morphology and connected components are the only primitives;
the skull is the largest bone-range component, the ventricles are CSF-range
voxels enclosed by it. Heavy lifting (labeling, erosion/dilation) is
delegated to scipy.ndimage; the contracts and tie rules here are ours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import EmptySegment, InvalidRange, OpenSkull
from .volume import VoxelVolume


@dataclass(frozen=True)
class LabelMask:
    """Binary voxel mask aligned to a source volume (bits shape (nz,ny,nx))."""

    dims: tuple[int, int, int]  # (nx, ny, nz)
    bits: np.ndarray

    def __post_init__(self):
        nx, ny, nz = self.dims
        if self.bits.dtype != np.bool_:
            object.__setattr__(self, "bits", self.bits.astype(bool))
        if self.bits.shape != (nz, ny, nx):
            raise ValueError(f"bits shape {self.bits.shape} != (nz,ny,nx)={(nz, ny, nx)}")

    @property
    def voxel_count_true(self) -> int:
        return int(np.count_nonzero(self.bits))

    def same_grid(self, other: "LabelMask") -> bool:
        return self.dims == other.dims


@dataclass(frozen=True)
class SegmentationConfig:
    bone_hu_min: float = 300.0
    csf_hu_min: float = 0.0
    csf_hu_max: float = 15.0
    min_component_voxels: int = 100
    closing_radius_vox: int = 1
    connectivity: int = 26  # for component analysis; boundary flood fill is always 6

    def __post_init__(self):
        if not (self.csf_hu_min < self.csf_hu_max < self.bone_hu_min):
            raise ValueError("need csf_hu_min < csf_hu_max < bone_hu_min")
        if self.closing_radius_vox < 0:
            raise ValueError("closing radius must be >= 0")
        if self.min_component_voxels < 1:
            raise ValueError("min_component_voxels must be >= 1")
        if self.connectivity not in (6, 26):
            raise ValueError("connectivity must be 6 or 26")


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 6:
        return ndimage.generate_binary_structure(3, 1)
    if connectivity == 26:
        return ndimage.generate_binary_structure(3, 3)
    raise ValueError("connectivity must be 6 or 26")


def threshold_mask(volume: VoxelVolume, lo: float, hi: float) -> LabelMask:
    """Mask of voxels with lo <= HU <= hi."""
    if lo > hi:
        raise InvalidRange(f"lo {lo} > hi {hi}")
    bits = (volume.samples >= lo) & (volume.samples <= hi)
    return LabelMask(dims=volume.dims, bits=bits)


def connected_components(mask: LabelMask, connectivity: int = 26) -> list[LabelMask]:
    """Split a mask into connected components, largest first.

    Equal-size components are ordered by the lowest z-major linear index
    they contain, so the output order is deterministic.
    """
    labels, count = ndimage.label(mask.bits, structure=_structure(connectivity))
    if count == 0:
        return []
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count + 1)
    # first occurrence in raster order == minimum linear index per label
    _, first_idx = np.unique(flat, return_index=True)
    order = sorted(range(1, count + 1), key=lambda lb: (-int(sizes[lb]), int(first_idx[lb])))
    return [LabelMask(dims=mask.dims, bits=labels == lb) for lb in order]


def morphology(mask: LabelMask, op: str, radius_vox: int, connectivity: int = 6) -> LabelMask:
    """Erode/dilate/open/close with the connectivity ball of the given radius.

    The grid is the whole universe: the ball is clipped at the border, so
    erosion does not strip boundary voxels and open/close are exactly
    idempotent. Radius 0 is the identity for every op.
    """
    if radius_vox < 0:
        raise ValueError("radius must be >= 0")
    if op not in ("erode", "dilate", "open", "close"):
        raise ValueError(f"unknown morphology op '{op}'")
    if radius_vox == 0:
        return LabelMask(dims=mask.dims, bits=mask.bits.copy())

    st = _structure(connectivity)

    def dil(b):
        return ndimage.binary_dilation(b, structure=st, iterations=radius_vox)

    def ero(b):
        return ndimage.binary_erosion(b, structure=st, iterations=radius_vox,
                                      border_value=1)

    if op == "erode":
        out = ero(mask.bits)
    elif op == "dilate":
        out = dil(mask.bits)
    elif op == "open":
        out = dil(ero(mask.bits))
    else:
        out = ero(dil(mask.bits))
    return LabelMask(dims=mask.dims, bits=out)


def segment_skull(volume: VoxelVolume, cfg: SegmentationConfig) -> LabelMask:
    """Bone threshold, closing, then keep the largest connected component."""
    thr = threshold_mask(volume, cfg.bone_hu_min, math.inf)
    closed = morphology(thr, "close", cfg.closing_radius_vox, connectivity=6)
    parts = connected_components(closed, cfg.connectivity)
    if not parts:
        raise EmptySegment("no voxel reaches the bone threshold")
    return parts[0]


def segment_ventricles(volume: VoxelVolume, skull: LabelMask,
                       cfg: SegmentationConfig) -> LabelMask:
    """CSF-range voxels enclosed by the skull, size-filtered and closed.

    The enclosed interior is everything not reachable from the volume
    boundary without crossing the skull (6-connected flood fill).
    """
    if skull.voxel_count_true == 0:
        raise EmptySegment("skull mask is empty")
    if skull.dims != volume.dims:
        raise ValueError("skull mask dims do not match volume")

    non_skull = ~skull.bits
    labels, count = ndimage.label(non_skull, structure=_structure(6))
    boundary_labels = np.unique(np.concatenate([
        labels[0].ravel(), labels[-1].ravel(),
        labels[:, 0].ravel(), labels[:, -1].ravel(),
        labels[:, :, 0].ravel(), labels[:, :, -1].ravel(),
    ]))
    boundary_labels = boundary_labels[boundary_labels != 0]
    exterior = np.isin(labels, boundary_labels)

    non_skull_count = int(np.count_nonzero(non_skull))
    if non_skull_count == 0 or np.count_nonzero(exterior) > 0.95 * non_skull_count:
        raise OpenSkull("boundary flood fill reaches >95% of non-skull voxels")

    interior = non_skull & ~exterior
    in_range = (volume.samples >= cfg.csf_hu_min) & (volume.samples <= cfg.csf_hu_max)
    candidate = LabelMask(dims=volume.dims, bits=interior & in_range)
    if candidate.voxel_count_true == 0:
        raise EmptySegment("no CSF-range voxel inside the skull")

    kept = np.zeros_like(candidate.bits)
    for comp in connected_components(candidate, cfg.connectivity):
        if comp.voxel_count_true >= cfg.min_component_voxels:
            kept |= comp.bits
    if not kept.any():
        raise EmptySegment(
            f"all CSF components smaller than {cfg.min_component_voxels} voxels")

    closed = morphology(LabelMask(dims=volume.dims, bits=kept), "close",
                        cfg.closing_radius_vox, connectivity=6)
    # closing must not leak into the skull
    result = closed.bits & ~skull.bits
    return LabelMask(dims=volume.dims, bits=result)


def dice_coefficient(a: LabelMask, b: LabelMask) -> float:
    """2|A∩B| / (|A|+|B|); 1.0 when both masks are empty."""
    total = a.voxel_count_true + b.voxel_count_true
    if total == 0:
        return 1.0
    inter = int(np.count_nonzero(a.bits & b.bits))
    return 2.0 * inter / total


def mask_as_volume(mask: LabelMask, like: VoxelVolume) -> VoxelVolume:
    """0/1 volume on the source grid, for raw-sidecar export of masks."""
    return VoxelVolume(
        dims=like.dims,
        spacing=like.spacing,
        origin=like.origin,
        orientation=like.orientation,
        samples=mask.bits.astype(np.float32),
    )
