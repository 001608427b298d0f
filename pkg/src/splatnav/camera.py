# -*- coding: utf-8 -*-
"""
camera.py - Pinhole camera mounted on the blimp body.

The optical axis points along body +X, image x runs to the body's right and
image y points down. Pixel centers sit on integer coordinates.
"""

import math
from dataclasses import dataclass

import numpy as np

from splatnav.config import CameraConfig
from splatnav.core import Pose


@dataclass(frozen=True)
class Camera:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ValueError(f"Camera resolution must be at least 8x8, got {self.width}x{self.height}")
        if not (self.fx > 0 and self.fy > 0 and math.isfinite(self.fx) and math.isfinite(self.fy)):
            raise ValueError(f"Focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    @classmethod
    def from_config(cls, config: CameraConfig) -> "Camera":
        return cls(**config.resolved())

    @classmethod
    def default(cls, width: int = 64, height: int = 48) -> "Camera":
        return cls.from_config(CameraConfig(width=width, height=height))

    def rotation(self, pose: Pose) -> np.ndarray:
        """World-to-camera rotation; rows are the camera right, down and forward axes in world coordinates."""
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        return np.array([
            [s, -c, 0.0],
            [0.0, 0.0, -1.0],
            [c, s, 0.0],
        ])

    def pixel_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-major pixel center coordinates (u, v), each flattened to length width*height."""
        v, u = np.mgrid[0:self.height, 0:self.width]
        return u.ravel().astype(float), v.ravel().astype(float)

    def ray_directions(self, pose: Pose) -> np.ndarray:
        """Unnormalized world-frame ray directions, one per pixel, shape (width*height, 3)."""
        u, v = self.pixel_grid()
        local = np.stack([(u - self.cx) / self.fx, (v - self.cy) / self.fy, np.ones_like(u)], axis=1)
        return local @ self.rotation(pose)
