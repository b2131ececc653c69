"""Damped least-squares pose refinement on reprojection error.

The pose is parametrized by a 6-vector increment (axis-angle rotation
delta composed on the left, translation delta added), so the Jacobian is
exact and cheap: d(p_cam)/d(dtheta) = -[R p]_x, d(p_cam)/d(dt) = I.
"""

from __future__ import annotations

import numpy as np

from ..errors import DivergedPose
from ..transforms import RigidPose, apply_rotation_increment
from .camera import CameraIntrinsics

MAX_ITERATIONS = 100
STEP_TOL = 1e-10
RESIDUAL_TOL = 1e-12
MAX_DAMPING_INCREASES = 10


def apply_increment(pose: RigidPose, delta) -> RigidPose:
    """Perturb a pose by (dtheta_xyz, dt_xyz)."""
    d = np.asarray(delta, dtype=float).reshape(6)
    return apply_rotation_increment(pose, d[:3], d[3:])


def reprojection_residuals(pose: RigidPose, object_points, image_points,
                           cam: CameraIntrinsics) -> np.ndarray:
    """Flattened (2N,) vector of projected-minus-observed pixel errors."""
    obj = np.asarray(object_points, dtype=float).reshape(-1, 3)
    img = np.asarray(image_points, dtype=float).reshape(-1, 2)
    projected = cam.project(pose.apply(obj))
    return (projected - img).reshape(-1)


def residual_jacobian(pose: RigidPose, object_points,
                      cam: CameraIntrinsics) -> np.ndarray:
    """(2N, 6) analytic Jacobian of the residuals wrt the pose increment."""
    obj = np.asarray(object_points, dtype=float).reshape(-1, 3)
    p_cam = pose.apply(obj)
    x, y, z = p_cam[:, 0], p_cam[:, 1], p_cam[:, 2]

    # d(pixel)/d(p_cam)
    du = np.zeros((len(obj), 3))
    dv = np.zeros((len(obj), 3))
    du[:, 0] = cam.fx / z
    du[:, 2] = -cam.fx * x / z ** 2
    dv[:, 1] = cam.fy / z
    dv[:, 2] = -cam.fy * y / z ** 2

    # d(p_cam)/d(dtheta) = -[p_cam]_x   (left increment acts on R p + t... )
    # note: with p_cam = exp([w]x)(R p) + t + dt the rotation acts on R p only
    rp = p_cam - pose.translation_vec
    dp_dw = np.zeros((len(obj), 3, 3))
    dp_dw[:, 0, 1] = rp[:, 2]
    dp_dw[:, 0, 2] = -rp[:, 1]
    dp_dw[:, 1, 0] = -rp[:, 2]
    dp_dw[:, 1, 2] = rp[:, 0]
    dp_dw[:, 2, 0] = rp[:, 1]
    dp_dw[:, 2, 1] = -rp[:, 0]

    jac = np.zeros((2 * len(obj), 6))
    jac[0::2, :3] = np.einsum("nk,nkj->nj", du, dp_dw)
    jac[1::2, :3] = np.einsum("nk,nkj->nj", dv, dp_dw)
    jac[0::2, 3:] = du
    jac[1::2, 3:] = dv
    return jac


def refine_pose(initial: RigidPose, object_points, image_points,
                cam: CameraIntrinsics) -> tuple[RigidPose, float]:
    """Levenberg-Marquardt refinement; returns (pose, reprojection RMS px).

    Only steps that reduce the residual are accepted, so the returned RMS
    never exceeds the initial one. Raises DivergedPose when the residual
    keeps growing through 10 consecutive damping increases.
    """
    if initial.translation[2] <= 0:
        raise ValueError("initial pose must have tz > 0")
    obj = np.asarray(object_points, dtype=float).reshape(-1, 3)
    img = np.asarray(image_points, dtype=float).reshape(-1, 2)

    pose = initial
    residual = reprojection_residuals(pose, obj, img, cam)
    cost = float(residual @ residual)
    lam = 1e-3

    for _ in range(MAX_ITERATIONS):
        jac = residual_jacobian(pose, obj, cam)
        jtj = jac.T @ jac
        jtr = jac.T @ residual

        accepted = False
        stalled = False
        grew = 0
        while not accepted and not stalled:
            try:
                delta = np.linalg.solve(jtj + lam * np.eye(6), -jtr)
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None:
                candidate = apply_increment(pose, delta)
                cand_residual = reprojection_residuals(candidate, obj, img, cam)
                cand_cost = float(cand_residual @ cand_residual)
                if cand_cost <= cost:
                    accepted = True
                    break
                # an uphill move within numerical noise of a tiny step means
                # we are sitting at the optimum, not diverging
                if (float(np.linalg.norm(delta)) < STEP_TOL
                        or cand_cost - cost < RESIDUAL_TOL * max(1.0, cost)):
                    stalled = True
                    break
            grew += 1
            if grew >= MAX_DAMPING_INCREASES:
                raise DivergedPose("residual grew through repeated damping increases")
            lam *= 10.0

        if stalled:
            break
        step = float(np.linalg.norm(delta))
        improvement = cost - cand_cost
        pose, residual, cost = candidate, cand_residual, cand_cost
        lam = max(lam * 0.3, 1e-12)
        if step < STEP_TOL or improvement < RESIDUAL_TOL:
            break

    rms = float(np.sqrt(cost / len(residual)))
    return pose, rms


def ambiguity_flip(pose: RigidPose) -> RigidPose:
    """The mirrored planar-pose hypothesis.

    Planar targets under weak perspective admit two poses whose plane
    normals are reflections of each other across the line of sight;
    refining both and keeping the lower-RMS one resolves the ambiguity.
    """
    R = pose.rotation_matrix()
    t = pose.translation_vec
    normal = R @ np.array([0.0, 0.0, 1.0])
    view = t / np.linalg.norm(t)
    mirrored = 2.0 * float(normal @ view) * view - normal
    axis = np.cross(normal, mirrored)
    s = np.linalg.norm(axis)
    if s < 1e-12:
        return pose
    axis = axis / s
    angle = float(np.arctan2(s, float(normal @ mirrored)))
    c, si = np.cos(angle), np.sin(angle)
    k = np.array([
        [0, -axis[2], axis[1]],
        [axis[2], 0, -axis[0]],
        [-axis[1], axis[0], 0],
    ])
    q = np.eye(3) + si * k + (1 - c) * (k @ k)
    from ..transforms import quat_from_matrix
    return RigidPose(rotation=quat_from_matrix(q @ R), translation=tuple(t))
