"""Rigid-body transforms as unit quaternion + translation.

Conventions used throughout the package:

- A transform T = (q, t) maps a point p (mm) to ``rotate(q, p) + t``.
- Quaternions are Hamilton (w, x, y, z), kept unit-norm to 1e-9.
- ``T_a_in_b`` reads "frame a expressed in frame b": it maps coordinates
  given in frame a to coordinates in frame b.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_UNIT_TOL = 1e-9


def _as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    return a


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) element: rotation quaternion (w,x,y,z) and translation in mm."""

    rotation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=float).reshape(4)
        t = _as_vec3(self.translation)
        n = float(np.linalg.norm(q))
        if n == 0.0:
            raise ValueError("zero quaternion")
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {n} too far from 1")
        q = q / n
        if q[0] < 0.0:  # canonical sign: w >= 0
            q = -q
        object.__setattr__(self, "rotation", tuple(float(x) for x in q))
        object.__setattr__(self, "translation", tuple(float(x) for x in t))

    # -- constructors -------------------------------------------------

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform()

    @staticmethod
    def from_matrix(m) -> "RigidTransform":
        """Build from a 4x4 (or 3x4) homogeneous matrix with a valid rotation block."""
        m = np.asarray(m, dtype=float)
        R = m[:3, :3]
        t = m[:3, 3]
        return RigidTransform(rotation=quat_from_matrix(R), translation=tuple(t))

    @staticmethod
    def from_rotation_matrix(R, t=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return RigidTransform(rotation=quat_from_matrix(np.asarray(R, dtype=float)),
                              translation=tuple(_as_vec3(t)))

    @staticmethod
    def from_axis_angle(axis, angle_rad: float, t=(0.0, 0.0, 0.0)) -> "RigidTransform":
        axis = _as_vec3(axis)
        n = np.linalg.norm(axis)
        if n == 0.0:
            if angle_rad != 0.0:
                raise ValueError("zero axis with nonzero angle")
            return RigidTransform(translation=tuple(_as_vec3(t)))
        axis = axis / n
        half = 0.5 * angle_rad
        q = (np.cos(half), *(np.sin(half) * axis))
        return RigidTransform(rotation=tuple(float(x) for x in q), translation=tuple(_as_vec3(t)))

    @staticmethod
    def from_translation(t) -> "RigidTransform":
        return RigidTransform(translation=tuple(_as_vec3(t)))

    # -- views ---------------------------------------------------------

    @property
    def quaternion(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=float)

    @property
    def translation_vec(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=float)

    def rotation_matrix(self) -> np.ndarray:
        return matrix_from_quat(self.quaternion)

    def to_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation_matrix()
        m[:3, 3] = self.translation_vec
        return m

    # -- algebra --------------------------------------------------------

    def apply(self, points) -> np.ndarray:
        """Transform one point (3,) or many points (N,3)."""
        p = np.asarray(points, dtype=float)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        out = p @ self.rotation_matrix().T + self.translation_vec
        return out[0] if single else out

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        return rigid_compose(self, other)

    def inverse(self) -> "RigidTransform":
        return rigid_inverse(self)


# RigidPose is the same object playing a different role (marker in camera).
RigidPose = RigidTransform


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vector(s) v by quaternion q."""
    return np.asarray(v, dtype=float) @ matrix_from_quat(q).T


def matrix_from_quat(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(R) -> tuple[float, float, float, float]:
    """Quaternion (w,x,y,z) from a proper rotation matrix (Shepperd's method)."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] >= R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    q = q / np.linalg.norm(q)
    return tuple(float(v) for v in q)


def rigid_compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Composition a∘b: the transform mapping p to a(b(p))."""
    q = quat_multiply(a.quaternion, b.quaternion)
    q = q / np.linalg.norm(q)
    t = a.apply(b.translation_vec)
    return RigidTransform(rotation=tuple(float(v) for v in q), translation=tuple(float(v) for v in t))


def rigid_inverse(t: RigidTransform) -> RigidTransform:
    """The transform mapping t(p) back to p."""
    w, x, y, z = t.quaternion
    q_inv = np.array([w, -x, -y, -z])
    t_inv = -quat_rotate(q_inv, t.translation_vec)
    return RigidTransform(rotation=tuple(float(v) for v in q_inv),
                          translation=tuple(float(v) for v in t_inv))


def apply_rotation_increment(t: RigidTransform, delta_rot, delta_trans) -> RigidTransform:
    """Left-compose an axis-angle rotation increment and add a translation step.

    Used by pose refinement: R <- exp([delta_rot]x) R, t <- t + delta_trans.
    """
    delta_rot = _as_vec3(delta_rot)
    angle = float(np.linalg.norm(delta_rot))
    if angle == 0.0:
        dq = np.array([1.0, 0.0, 0.0, 0.0])
    else:
        axis = delta_rot / angle
        dq = np.array([np.cos(angle / 2), *(np.sin(angle / 2) * axis)])
    q = quat_multiply(dq, t.quaternion)
    q = q / np.linalg.norm(q)
    new_t = t.translation_vec + _as_vec3(delta_trans)
    return RigidTransform(rotation=tuple(float(v) for v in q), translation=tuple(float(v) for v in new_t))


def rotation_angle_rad(a: RigidTransform, b: RigidTransform) -> float:
    """Geodesic angle between the rotations of two transforms."""
    dq = quat_multiply(a.quaternion, np.array([1, -1, -1, -1]) * b.quaternion)
    w = min(1.0, abs(float(dq[0])))
    return 2.0 * float(np.arccos(w))
