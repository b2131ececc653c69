"""Synthetic marker rasterizer, the ground-truth oracle for detection.

Renders by inverse projective mapping: each output pixel (4x4 subsamples)
is pulled back to the marker plane and looked up in the cell grid.
"""

from __future__ import annotations

import numpy as np

from ..errors import MarkerNotVisible
from ..transforms import RigidPose
from .camera import CameraIntrinsics
from .marker import MarkerSpec

WHITE = 255
BLACK = 20
_SUPERSAMPLE = 4  # per axis


def marker_plane_homography(spec: MarkerSpec, pose: RigidPose,
                            cam: CameraIntrinsics) -> np.ndarray:
    """H mapping marker-plane (x_mm, y_mm, 1) to image (u, v, 1)."""
    R = pose.rotation_matrix()
    t = pose.translation_vec
    return cam.matrix @ np.column_stack([R[:, 0], R[:, 1], t])


def check_visibility(spec: MarkerSpec, pose: RigidPose, cam: CameraIntrinsics) -> np.ndarray:
    """Corner pixels if the marker front face is fully visible, else raise."""
    R = pose.rotation_matrix()
    t = pose.translation_vec
    if t[2] <= 0:
        raise MarkerNotVisible("marker is behind the camera")
    # printed face looks along marker -Z
    front_normal = R @ np.array([0.0, 0.0, -1.0])
    view = t / np.linalg.norm(t)
    if float(front_normal @ view) >= 0:
        raise MarkerNotVisible("marker back face toward camera")
    corners_cam = spec.corners_mm() @ R.T + t
    if np.any(corners_cam[:, 2] <= 0):
        raise MarkerNotVisible("marker crosses the image plane")
    uv = cam.project(corners_cam)
    if not np.all(cam.contains(uv, margin=1.0)):
        raise MarkerNotVisible("marker extends outside the image")
    return uv


def render_marker_image(spec: MarkerSpec, pose: RigidPose,
                        cam: CameraIntrinsics) -> np.ndarray:
    """Grayscale uint8 image of the marker on a white background."""
    corner_px = check_visibility(spec, pose, cam)
    H = marker_plane_homography(spec, pose, cam)
    H_inv = np.linalg.inv(H)

    u0 = max(0, int(np.floor(corner_px[:, 0].min())) - 2)
    u1 = min(cam.width - 1, int(np.ceil(corner_px[:, 0].max())) + 2)
    v0 = max(0, int(np.floor(corner_px[:, 1].min())) - 2)
    v1 = min(cam.height - 1, int(np.ceil(corner_px[:, 1].max())) + 2)

    image = np.full((cam.height, cam.width), WHITE, dtype=np.uint8)
    if u1 < u0 or v1 < v0:
        return image

    ss = _SUPERSAMPLE
    offsets = (np.arange(ss) + 0.5) / ss - 0.5
    us = (np.arange(u0, u1 + 1)[:, None] + offsets[None, :]).reshape(-1)
    vs = (np.arange(v0, v1 + 1)[:, None] + offsets[None, :]).reshape(-1)
    uu, vv = np.meshgrid(us, vs)  # (rows=subsampled v, cols=subsampled u)

    denom = H_inv[2, 0] * uu + H_inv[2, 1] * vv + H_inv[2, 2]
    x = (H_inv[0, 0] * uu + H_inv[0, 1] * vv + H_inv[0, 2]) / denom
    y = (H_inv[1, 0] * uu + H_inv[1, 1] * vv + H_inv[1, 2]) / denom

    half = spec.side_mm / 2.0
    cell = spec.cell_mm
    col = np.floor((x + half) / cell).astype(np.int64)
    row = np.floor((half - y) / cell).astype(np.int64)
    w = spec.cells_per_side
    inside = (col >= 0) & (col < w) & (row >= 0) & (row < w)

    grid = spec.full_grid()
    values = np.full(uu.shape, float(WHITE))
    safe_row = np.clip(row, 0, w - 1)
    safe_col = np.clip(col, 0, w - 1)
    black = grid[safe_row, safe_col] & inside
    values[black] = float(BLACK)

    # average the ss x ss subsamples of each pixel
    nv = v1 - v0 + 1
    nu = u1 - u0 + 1
    block = values.reshape(nv, ss, nu, ss).mean(axis=(1, 3))
    image[v0:v1 + 1, u0:u1 + 1] = np.clip(np.rint(block), 0, 255).astype(np.uint8)
    return image
