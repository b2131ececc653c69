"""Fiducial-marker registration: rendering, detection, and pose estimation.

Frame conventions (shared by the renderer, detector, and pose code):

- Camera: X right, Y down in the image, Z forward along the optical axis.
  Pinhole projection u = fx*x/z + cx, v = fy*y/z + cy, zero distortion.
- Marker: X right and Y up in the marker plane, origin at the center. Its
  printed face looks along -Z, so the canonical facing pose is the
  identity rotation with t = (0, 0, distance).
- A pose maps marker coordinates to camera coordinates.
"""

from .camera import CameraIntrinsics
from .marker import MarkerSpec
from .render import render_marker_image
from .homography import homography_dlt, pose_from_homography
from .refine import refine_pose, reprojection_residuals, residual_jacobian, apply_increment
from .detect import DetectionResult, detect_marker

__all__ = [
    "CameraIntrinsics",
    "MarkerSpec",
    "render_marker_image",
    "homography_dlt",
    "pose_from_homography",
    "refine_pose",
    "reprojection_residuals",
    "residual_jacobian",
    "apply_increment",
    "DetectionResult",
    "detect_marker",
]
