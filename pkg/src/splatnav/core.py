# -*- coding: utf-8 -*-
"""
core.py - Geometry primitives and shared value types.

Provides angle arithmetic, the 4-DoF robot pose, the floor-plane cell grid
over which the goal belief is maintained, and the Image/Descriptor values
passed between the renderer, the descriptor and the planner. All types are
immutable once constructed.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from splatnav.errors import AngleError, OutOfBoundsError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """
    Wraps an angle to the half-open interval (-pi, pi].

    Args:
        theta (float): Angle in radians.

    Returns:
        float: The congruent angle in (-pi, pi]. Angles already in range are returned unchanged.

    Raises:
        AngleError: If theta is NaN or infinite.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise AngleError(f"Cannot wrap non-finite angle {theta!r}")
    if -math.pi < theta <= math.pi:
        return theta
    r = math.fmod(theta + math.pi, TWO_PI)
    if r <= 0.0:
        r += TWO_PI
    return r - math.pi


@dataclass(frozen=True)
class Pose:
    """Robot state (x, y, z, theta) in the inertial frame; theta is yaw about +Z."""
    x: float
    y: float
    z: float
    theta: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Pose.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: "Pose") -> float:
        """Euclidean distance between the two positions (yaw ignored)."""
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.z, self.theta]

    @classmethod
    def from_list(cls, values) -> "Pose":
        if len(values) != 4:
            raise ValueError(f"A pose needs 4 values (x, y, z, theta), got {len(values)}")
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class CellGrid:
    """
    Equal-size square cells partitioning the floor plane of the arena.

    Cells are indexed row-major: index = row * nx + col, with row along +Y.
    z and yaw are marginalized out.
    """
    origin: tuple[float, float] = (0.0, 0.0)
    cell_size: float = 1.0
    nx: int = 10
    ny: int = 10

    def __post_init__(self):
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"Grid needs at least one cell, got nx={self.nx}, ny={self.ny}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def size(self) -> int:
        """Number of cells M."""
        return self.nx * self.ny

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the footprint."""
        ox, oy = self.origin
        return ox, ox + self.nx * self.cell_size, oy, oy + self.ny * self.cell_size

    def contains(self, x: float, y: float) -> bool:
        xmin, xmax, ymin, ymax = self.extent
        return xmin <= x <= xmax and ymin <= y <= ymax

    def cell_of_xy(self, x: float, y: float) -> int:
        if not self.contains(x, y):
            raise OutOfBoundsError(f"Point ({x:.3f}, {y:.3f}) lies outside the grid footprint {self.extent}")
        ox, oy = self.origin
        # the far edges belong to the last row/column
        col = min(int(math.floor((x - ox) / self.cell_size)), self.nx - 1)
        row = min(int(math.floor((y - oy) / self.cell_size)), self.ny - 1)
        return row * self.nx + col

    def cell_center(self, index: int) -> tuple[float, float]:
        if not 0 <= index < self.size:
            raise OutOfBoundsError(f"Cell index {index} outside [0, {self.size})")
        row, col = divmod(index, self.nx)
        ox, oy = self.origin
        return ox + (col + 0.5) * self.cell_size, oy + (row + 0.5) * self.cell_size


def cell_index(grid: CellGrid, pose: Pose) -> int:
    """
    Maps a pose to the index of the floor cell containing its (x, y).

    Raises:
        OutOfBoundsError: If (x, y) lies outside the grid footprint.
    """
    return grid.cell_of_xy(pose.x, pose.y)


def _frozen_copy(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Image:
    """RGB image, row-major (height, width, 3), channels in [0, 1]."""
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=float)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"Image pixels must have shape (height, width, 3), got {pixels.shape}")
        if pixels.size and (not np.all(np.isfinite(pixels)) or pixels.min() < 0.0 or pixels.max() > 1.0):
            raise ValueError("Image channel values must lie in [0, 1]")
        object.__setattr__(self, "pixels", _frozen_copy(pixels))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def uniform(cls, width: int, height: int, color) -> "Image":
        return cls(np.broadcast_to(np.asarray(color, dtype=float), (height, width, 3)))

    def to_uint8(self) -> np.ndarray:
        """8-bit conversion, used only at the file boundary."""
        return np.round(self.pixels * 255.0).astype(np.uint8)


@dataclass(frozen=True)
class Descriptor:
    """Unit-norm global image descriptor. A zero vector becomes the first basis vector."""
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0:
            raise ValueError("Descriptor must have at least one dimension")
        norm = float(np.linalg.norm(values))
        if not math.isfinite(norm):
            raise ValueError("Descriptor values must be finite")
        if norm <= 1e-12:
            values = np.zeros_like(values)
            values[0] = 1.0
        else:
            values = values / norm
        object.__setattr__(self, "values", _frozen_copy(values))

    @property
    def dim(self) -> int:
        return self.values.size
