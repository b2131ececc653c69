import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_rigid
from neuronav.transforms import (
    RigidTransform,
    apply_rotation_increment,
    matrix_from_quat,
    quat_from_matrix,
    rigid_compose,
    rigid_inverse,
    rotation_angle_rad,
)


def test_compose_identity():
    rng = np.random.default_rng(0)
    t = random_rigid(rng)
    ident = RigidTransform.identity()
    for composed in (rigid_compose(ident, t), rigid_compose(t, ident)):
        assert np.allclose(composed.quaternion, t.quaternion, atol=1e-12)
        assert np.allclose(composed.translation, t.translation, atol=1e-12)


def test_compose_with_inverse_is_identity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        t = random_rigid(rng)
        ident = rigid_compose(t, rigid_inverse(t))
        assert abs(abs(ident.quaternion[0]) - 1.0) < 1e-9
        assert np.linalg.norm(ident.translation) < 1e-9


def test_compose_matches_matrix_product_on_points():
    # oracle: 4x4 homogeneous matrix algebra
    rng = np.random.default_rng(2)
    for _ in range(10):
        a, b = random_rigid(rng), random_rigid(rng)
        composed = rigid_compose(a, b)
        points = rng.uniform(-1000, 1000, size=(100, 3))
        via_matrix = (a.to_matrix() @ b.to_matrix())[:3] @ \
            np.concatenate([points, np.ones((100, 1))], axis=1).T
        assert np.allclose(composed.apply(points), via_matrix.T, atol=1e-9)


def test_inverse_matches_matrix_inverse():
    rng = np.random.default_rng(3)
    for _ in range(10):
        t = random_rigid(rng)
        assert np.allclose(rigid_inverse(t).to_matrix(),
                           np.linalg.inv(t.to_matrix()), atol=1e-9)


def test_inverse_involution():
    rng = np.random.default_rng(4)
    t = random_rigid(rng)
    back = rigid_inverse(rigid_inverse(t))
    assert np.allclose(back.quaternion, t.quaternion, atol=1e-9)
    assert np.allclose(back.translation, t.translation, atol=1e-9)


def test_quaternion_matrix_round_trip_tight():
    rng = np.random.default_rng(5)
    for _ in range(50):
        t = random_rigid(rng)
        back = RigidTransform.from_matrix(t.to_matrix())
        assert np.allclose(back.quaternion, t.quaternion, atol=1e-12)
        assert np.allclose(back.translation, t.translation, atol=1e-12)
        q = np.asarray(quat_from_matrix(matrix_from_quat(t.quaternion)))
        # q and -q encode the same rotation
        assert min(np.abs(q - t.quaternion).max(),
                   np.abs(q + t.quaternion).max()) < 1e-12
        m = matrix_from_quat(q)
        assert np.allclose(m @ m.T, np.eye(3), atol=1e-12)
        assert abs(np.linalg.det(m) - 1.0) < 1e-12


def test_rotation_increment_small_angle():
    pose = RigidTransform.from_translation((0, 0, 100))
    moved = apply_rotation_increment(pose, (1e-3, 0, 0), (1, 2, 3))
    assert np.allclose(moved.translation, (1, 2, 103))
    assert abs(rotation_angle_rad(moved, pose) - 1e-3) < 1e-9


def test_non_unit_quaternion_rejected():
    with pytest.raises(ValueError):
        RigidTransform(rotation=(2.0, 0.0, 0.0, 0.0), translation=(0, 0, 0))
    with pytest.raises(ValueError):
        RigidTransform(rotation=(0.0, 0.0, 0.0, 0.0))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_apply_then_inverse_recovers_points(seed):
    rng = np.random.default_rng(seed)
    t = random_rigid(rng)
    p = rng.uniform(-1000, 1000, size=(10, 3))
    assert np.allclose(rigid_inverse(t).apply(t.apply(p)), p, atol=1e-8)
