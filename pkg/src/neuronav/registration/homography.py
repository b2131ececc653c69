"""Plane-to-image homography (normalized DLT) and pose extraction."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateConfiguration, SingularHomography
from ..transforms import RigidPose, quat_from_matrix
from .camera import CameraIntrinsics


def _conditioning(points: np.ndarray) -> np.ndarray:
    """Similarity that moves points to zero mean and unit RMS distance."""
    mean = points.mean(axis=0)
    rms = np.sqrt(np.mean(np.sum((points - mean) ** 2, axis=1)))
    s = 1.0 / rms if rms > 0 else 1.0
    return np.array([
        [s, 0.0, -s * mean[0]],
        [0.0, s, -s * mean[1]],
        [0.0, 0.0, 1.0],
    ])


def homography_dlt(plane_points, image_points) -> np.ndarray:
    """Least-squares H with H @ (x, y, 1) ~ (u, v, 1), from >= 4 correspondences.

    Both point sets are conditioned before the SVD. H is scaled so h33 = 1
    unless that entry is numerically zero. Raises DegenerateConfiguration
    when the correspondences do not determine a homography (e.g. collinear
    plane points).
    """
    plane = np.asarray(plane_points, dtype=float).reshape(-1, 2)
    image = np.asarray(image_points, dtype=float).reshape(-1, 2)
    if len(plane) != len(image) or len(plane) < 4:
        raise DegenerateConfiguration("need at least 4 correspondences")

    t_plane = _conditioning(plane)
    t_image = _conditioning(image)
    ph = np.column_stack([plane, np.ones(len(plane))]) @ t_plane.T
    ih = np.column_stack([image, np.ones(len(image))]) @ t_image.T

    a = np.zeros((2 * len(plane), 9))
    x, y = ph[:, 0], ph[:, 1]
    u, v = ih[:, 0], ih[:, 1]
    a[0::2, 0] = -x
    a[0::2, 1] = -y
    a[0::2, 2] = -1.0
    a[0::2, 6] = u * x
    a[0::2, 7] = u * y
    a[0::2, 8] = u
    a[1::2, 3] = -x
    a[1::2, 4] = -y
    a[1::2, 5] = -1.0
    a[1::2, 6] = v * x
    a[1::2, 7] = v * y
    a[1::2, 8] = v

    _, sv, vt = np.linalg.svd(a)
    # a homography needs an 8-dimensional row space
    if sv[7] < 1e-9 * sv[0]:
        raise DegenerateConfiguration("correspondences are rank deficient")
    h = vt[-1].reshape(3, 3)
    H = np.linalg.inv(t_image) @ h @ t_plane
    if abs(H[2, 2]) > 1e-12:
        H = H / H[2, 2]
    return H


def pose_from_homography(H, cam: CameraIntrinsics) -> RigidPose:
    """Marker pose from a metric plane homography (plane coords in mm).

    Columns of K^-1 H give the scaled (r1, r2, t); the rotation is snapped
    to SO(3) by polar decomposition and the sign is fixed so tz > 0.
    """
    H = np.asarray(H, dtype=float).reshape(3, 3)
    if abs(np.linalg.det(H)) < 1e-12:
        raise SingularHomography("homography is not invertible")

    m = np.linalg.inv(cam.matrix) @ H
    n1 = np.linalg.norm(m[:, 0])
    n2 = np.linalg.norm(m[:, 1])
    if n1 < 1e-15 or n2 < 1e-15:
        raise SingularHomography("degenerate rotation columns")
    scale = 2.0 / (n1 + n2)
    r1 = m[:, 0] * scale
    r2 = m[:, 1] * scale
    t = m[:, 2] * scale
    if t[2] < 0:
        r1, r2, t = -r1, -r2, -t
    r3 = np.cross(r1, r2)
    approx = np.column_stack([r1, r2, r3])

    u, _, vt = np.linalg.svd(approx)
    R = u @ np.diag([1.0, 1.0, np.linalg.det(u @ vt)]) @ vt
    return RigidPose(rotation=quat_from_matrix(R), translation=tuple(t))
