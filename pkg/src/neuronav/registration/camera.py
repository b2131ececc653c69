"""Pinhole camera model (zero distortion)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])

    def project(self, points_cam) -> np.ndarray:
        """Project camera-frame points (N,3) to pixels (N,2). Requires z > 0."""
        p = np.atleast_2d(np.asarray(points_cam, dtype=float))
        z = p[:, 2]
        u = self.fx * p[:, 0] / z + self.cx
        v = self.fy * p[:, 1] / z + self.cy
        return np.stack([u, v], axis=1)

    def contains(self, uv, margin: float = 0.0) -> np.ndarray:
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        return ((uv[:, 0] >= margin) & (uv[:, 0] <= self.width - 1 - margin)
                & (uv[:, 1] >= margin) & (uv[:, 1] <= self.height - 1 - margin))

    def to_json(self) -> str:
        return json.dumps({
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "CameraIntrinsics":
        d = json.loads(text)
        return CameraIntrinsics(fx=float(d["fx"]), fy=float(d["fy"]),
                                cx=float(d["cx"]), cy=float(d["cy"]),
                                width=int(d["width"]), height=int(d["height"]))

    @staticmethod
    def load(path) -> "CameraIntrinsics":
        return CameraIntrinsics.from_json(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())
