import numpy as np
import pytest

from neuronav.errors import DegenerateConfiguration, SingularHomography
from neuronav.registration import CameraIntrinsics, homography_dlt, pose_from_homography
from neuronav.transforms import RigidTransform, rotation_angle_rad


def apply_h(h, pts):
    p = np.column_stack([pts, np.ones(len(pts))]) @ h.T
    return p[:, :2] / p[:, 2:3]


def test_identity_mapping():
    pts = np.array([[0, 0], [10, 0], [10, 10], [0, 10], [3, 7]], dtype=float)
    h = homography_dlt(pts, pts)
    assert np.allclose(h, np.eye(3), atol=1e-9)


def test_collinear_plane_points_degenerate():
    plane = np.array([[0, 0], [1, 0], [2, 0], [3, 0]], dtype=float)
    image = np.array([[0, 0], [1, 1], [2, 2], [3, 3]], dtype=float)
    with pytest.raises(DegenerateConfiguration):
        homography_dlt(plane, image)


def test_too_few_points():
    with pytest.raises(DegenerateConfiguration):
        homography_dlt(np.zeros((3, 2)), np.zeros((3, 2)))


def test_recovers_random_homographies():
    rng = np.random.default_rng(0)
    plane = np.array([[-25, 25], [25, 25], [25, -25], [-25, -25],
                      [0, 10], [-12, 3]], dtype=float)
    found = 0
    while found < 20:
        h_true = np.eye(3) + rng.normal(scale=0.1, size=(3, 3))
        h_true[2, 2] = 1.0
        if np.linalg.cond(h_true) > 100 or abs(np.linalg.det(h_true)) < 1e-3:
            continue
        found += 1
        image = apply_h(h_true, plane)
        h = homography_dlt(plane, image)
        assert np.linalg.norm(h - h_true) / np.linalg.norm(h_true) < 1e-6


def test_h33_normalized():
    pts = np.array([[0, 0], [10, 0], [10, 10], [0, 10]], dtype=float)
    h = homography_dlt(pts, pts * 3.0 + 2.0)
    assert h[2, 2] == pytest.approx(1.0)


# --- pose extraction -----------------------------------------------------------


def test_canonical_facing_pose(camera, marker):
    corners = marker.corners_mm()
    pose_true = RigidTransform.from_translation((0, 0, 500))
    img = camera.project(pose_true.apply(corners))
    h = homography_dlt(corners[:, :2], img)
    pose = pose_from_homography(h, camera)
    assert np.allclose(pose.rotation_matrix(), np.eye(3), atol=1e-6)
    assert np.allclose(pose.translation, (0, 0, 500), atol=1e-6)


def test_tilted_pose_recovered_within_half_degree(camera, marker):
    rng = np.random.default_rng(1)
    for _ in range(20):
        tilt = RigidTransform.from_axis_angle(
            (rng.normal(), rng.normal(), 0.0), np.radians(30.0))
        pose_true = RigidTransform(rotation=tilt.rotation, translation=(20, -10, 600))
        corners = marker.corners_mm()
        img = camera.project(pose_true.apply(corners))
        h = homography_dlt(corners[:, :2], img)
        pose = pose_from_homography(h, camera)
        assert np.degrees(rotation_angle_rad(pose, pose_true)) < 0.5
        assert pose.translation[2] > 0


def test_singular_homography_rejected(camera):
    h = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.5, 1.0, 1.5]])
    with pytest.raises(SingularHomography):
        pose_from_homography(h, camera)
