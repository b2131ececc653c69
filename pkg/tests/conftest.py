import numpy as np
import pytest

from neuronav.registration import CameraIntrinsics, MarkerSpec
from neuronav.transforms import RigidPose, RigidTransform, rigid_compose


@pytest.fixture(scope="session")
def camera():
    return CameraIntrinsics(fx=800.0, fy=800.0, cx=320.0, cy=240.0,
                            width=640, height=480)


@pytest.fixture(scope="session")
def marker():
    return MarkerSpec.from_id(7, side_mm=50.0)


def random_rigid(rng) -> RigidTransform:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0, np.pi)
    t = rng.uniform(-500, 500, size=3)
    return RigidTransform.from_axis_angle(axis, angle, t)


def random_visible_pose(rng, spec, cam, dist_range=(300.0, 1500.0),
                        max_tilt_deg=60.0) -> RigidPose:
    """Uniformly sampled pose with the marker fully inside the frustum."""
    from neuronav.errors import MarkerNotVisible
    from neuronav.registration.render import check_visibility

    while True:
        dist = rng.uniform(*dist_range)
        tilt = rng.uniform(0.0, np.radians(max_tilt_deg))
        axis_angle = rng.uniform(0, 2 * np.pi)
        axis = np.array([np.cos(axis_angle), np.sin(axis_angle), 0.0])
        roll = rng.uniform(0, 2 * np.pi)
        rot = rigid_compose(RigidTransform.from_axis_angle(axis, tilt),
                            RigidTransform.from_axis_angle((0, 0, 1), roll))
        max_off = 0.25 * dist / cam.fx * cam.width
        t = (rng.uniform(-max_off, max_off),
             rng.uniform(-0.6 * max_off, 0.6 * max_off),
             dist)
        pose = RigidPose(rotation=rot.rotation, translation=t)
        try:
            check_visibility(spec, pose, cam)
            return pose
        except MarkerNotVisible:
            continue
