# -*- coding: utf-8 -*-
"""
scene.py - Scene priors, the rendering oracle and collision queries.

A SceneModel carries the arena bounds, axis-aligned boxes (some of which are
obstacles), the goal pose and either a procedural primitive list or a Gaussian
splat cloud. `render` is the single entry point used by the planner, whichever
backend the scene carries.

Scene files are JSON:

    {
      "bounds": [[0, 0, 0], [10, 10, 2]],
      "background": [0.55, 0.65, 0.8],
      "goal_pose": [x, y, z, theta],
      "start_pose": [x, y, z, theta],
      "boxes": [{"center": [..], "size": [..], "color": [..], "obstacle": true}],
      "splats": "relative/or/absolute.ply"
    }
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

from splatnav.camera import Camera
from splatnav.core import Image, Pose
from splatnav.errors import ConfigurationError, SplatParseError
from splatnav.splats import GaussianCloud, load_splats, render_splats

logger = logging.getLogger(__name__)

NEAR_PLANE = 0.05
# shading factors: vertical faces, top faces, bottom faces
SIDE_SHADE = 0.8
TOP_SHADE = 1.0
BOTTOM_SHADE = 0.6


@dataclass(frozen=True)
class Box:
    """Axis-aligned box from lo to hi corners (meters) with an RGB color."""
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    color: tuple[float, float, float] = (0.5, 0.5, 0.5)
    obstacle: bool = True

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3 or any(h < l for l, h in zip(lo, hi)):
            raise ValueError(f"Box corners must satisfy lo <= hi on all 3 axes, got {lo}, {hi}")
        color = tuple(float(c) for c in self.color)
        if len(color) != 3 or any(not 0.0 <= c <= 1.0 for c in color):
            raise ValueError(f"Box color must be RGB in [0, 1], got {color}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "color", color)

    @classmethod
    def from_center(cls, center, size, color=(0.5, 0.5, 0.5), obstacle: bool = True) -> "Box":
        c, s = np.asarray(center, dtype=float), np.asarray(size, dtype=float) / 2.0
        return cls(tuple(c - s), tuple(c + s), tuple(color), obstacle)

    @property
    def center(self) -> tuple[float, float, float]:
        return tuple((l + h) / 2.0 for l, h in zip(self.lo, self.hi))

    @property
    def size(self) -> tuple[float, float, float]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    def contains_point(self, p) -> bool:
        return all(l <= v <= h for l, v, h in zip(self.lo, p, self.hi))

    def distance_to_point(self, p) -> float:
        p = np.asarray(p, dtype=float)
        gap = np.maximum(np.maximum(np.asarray(self.lo) - p, 0.0), p - np.asarray(self.hi))
        return float(np.linalg.norm(gap))

    def inflated(self, margin: float) -> "Box":
        return Box(tuple(v - margin for v in self.lo), tuple(v + margin for v in self.hi), self.color, self.obstacle)

    def to_dict(self) -> dict[str, Any]:
        return {
            "center": list(self.center),
            "size": list(self.size),
            "color": list(self.color),
            "obstacle": self.obstacle,
        }


@dataclass(frozen=True)
class SceneModel:
    """Immutable scene prior: bounds, boxes, goal, and optionally a splat cloud."""
    bounds: Box
    boxes: tuple[Box, ...] = ()
    goal_pose: Pose = Pose(0.0, 0.0, 0.0)
    background: tuple[float, float, float] = (0.55, 0.65, 0.8)
    splats: Optional[GaussianCloud] = field(default=None, repr=False)
    start_pose: Optional[Pose] = None

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        for box in self.obstacles:
            if not (self.bounds.contains_point(box.lo) and self.bounds.contains_point(box.hi)):
                raise ConfigurationError(f"Obstacle {box} lies outside the arena bounds")
        if not self.in_bounds(self.goal_pose.position):
            raise ConfigurationError(f"Goal pose {self.goal_pose} lies outside the arena bounds")
        if any(box.contains_point(self.goal_pose.position) for box in self.obstacles):
            raise ConfigurationError(f"Goal pose {self.goal_pose} lies inside an obstacle")

    @property
    def obstacles(self) -> tuple[Box, ...]:
        return tuple(box for box in self.boxes if box.obstacle)

    @property
    def backend(self) -> str:
        return "splat" if self.splats is not None else "procedural"

    def in_bounds(self, p) -> bool:
        return self.bounds.contains_point(p)


# --- Rendering ---

def _render_boxes(boxes: tuple[Box, ...], background, camera: Camera, pose: Pose) -> Image:
    n_pix = camera.width * camera.height
    rgb = np.tile(np.asarray(background, dtype=float), (n_pix, 1))
    if not boxes:
        return Image(rgb.reshape(camera.height, camera.width, 3))
    origin = pose.position
    dirs = camera.ray_directions(pose)
    safe = np.where(np.abs(dirs) < 1e-12, 1e-12, dirs)
    inv = 1.0 / safe
    lo = np.array([b.lo for b in boxes])
    hi = np.array([b.hi for b in boxes])
    colors = np.array([b.color for b in boxes])

    t1 = (lo[None, :, :] - origin) * inv[:, None, :]
    t2 = (hi[None, :, :] - origin) * inv[:, None, :]
    t_min = np.minimum(t1, t2)
    t_near = t_min.max(axis=2)
    face_axis = t_min.argmax(axis=2)
    t_far = np.maximum(t1, t2).min(axis=2)
    hit = (t_near <= t_far) & (t_near > NEAR_PLANE)
    t_hit = np.where(hit, t_near, np.inf)

    nearest = t_hit.argmin(axis=1)
    rows = np.arange(n_pix)
    visible = np.isfinite(t_hit[rows, nearest])
    axis = face_axis[rows, nearest]
    shade = np.where(axis < 2, SIDE_SHADE, np.where(dirs[:, 2] < 0, TOP_SHADE, BOTTOM_SHADE))
    rgb[visible] = colors[nearest[visible]] * shade[visible, None]
    return Image(rgb.reshape(camera.height, camera.width, 3))


def render(scene: SceneModel, camera: Camera, pose: Pose) -> Image:
    """
    Renders the view from a pose. Pure: identical inputs give bit-identical images.

    Procedural scenes are ray-cast against their boxes with flat per-face shading;
    splat scenes are alpha-composited front to back.
    """
    if scene.splats is not None:
        return render_splats(scene.splats, camera, pose, scene.background)
    return _render_boxes(scene.boxes, scene.background, camera, pose)


# --- Collision ---

def _segment_box_distance(a: np.ndarray, b: np.ndarray, box: Box) -> float:
    """Minimum distance between segment ab and the box; convex in the segment parameter."""
    ends = min(box.distance_to_point(a), box.distance_to_point(b))
    if ends == 0.0 or np.allclose(a, b):
        return ends
    res = minimize_scalar(lambda t: box.distance_to_point(a + t * (b - a)), bounds=(0.0, 1.0),
                          method="bounded", options={"xatol": 1e-10})
    return min(ends, float(res.fun))


def _segment_hits_box(a: np.ndarray, b: np.ndarray, box: Box) -> bool:
    """Slab test of segment ab against the box."""
    d = b - a
    t0, t1 = 0.0, 1.0
    for i in range(3):
        if abs(d[i]) < 1e-15:
            if a[i] < box.lo[i] or a[i] > box.hi[i]:
                return False
            continue
        ta, tb = (box.lo[i] - a[i]) / d[i], (box.hi[i] - a[i]) / d[i]
        t0, t1 = max(t0, min(ta, tb)), min(t1, max(ta, tb))
        if t0 > t1:
            return False
    return True


def segment_collides(scene: SceneModel, a: Pose, b: Pose, radius: float) -> bool:
    """
    True iff the segment between the two positions passes within `radius` of any
    obstacle, or either end lies outside the arena bounds.
    """
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    pa, pb = a.position, b.position
    if not (scene.in_bounds(pa) and scene.in_bounds(pb)):
        return True
    for box in scene.obstacles:
        # the inflated box is a superset of the rounded box
        if not _segment_hits_box(pa, pb, box.inflated(radius)):
            continue
        if _segment_hits_box(pa, pb, box) or _segment_box_distance(pa, pb, box) <= radius:
            return True
    return False


# --- Transformations and I/O ---

def rotate_scene(scene: SceneModel, quarter_turns: int, pivot: tuple[float, float]) -> SceneModel:
    """Rotates a procedural scene about a vertical axis through pivot by quarter_turns * pi/2."""
    k = quarter_turns % 4
    angle = k * math.pi / 2.0
    c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][k]
    px, py = pivot

    def rot_xy(x: float, y: float) -> tuple[float, float]:
        dx, dy = x - px, y - py
        return px + c * dx - s * dy, py + s * dx + c * dy

    def rot_box(box: Box) -> Box:
        x0, y0 = rot_xy(box.lo[0], box.lo[1])
        x1, y1 = rot_xy(box.hi[0], box.hi[1])
        return Box((min(x0, x1), min(y0, y1), box.lo[2]), (max(x0, x1), max(y0, y1), box.hi[2]),
                   box.color, box.obstacle)

    def rot_pose(pose: Optional[Pose]) -> Optional[Pose]:
        if pose is None:
            return None
        x, y = rot_xy(pose.x, pose.y)
        return Pose(x, y, pose.z, pose.theta + angle)

    if scene.splats is not None:
        raise ValueError("rotate_scene only supports procedural scenes")
    return replace(scene, bounds=rot_box(scene.bounds), boxes=tuple(rot_box(b) for b in scene.boxes),
                   goal_pose=rot_pose(scene.goal_pose), start_pose=rot_pose(scene.start_pose))


def scene_to_dict(scene: SceneModel, splats_path: Optional[str] = None) -> dict[str, Any]:
    data: dict[str, Any] = {
        "bounds": [list(scene.bounds.lo), list(scene.bounds.hi)],
        "background": list(scene.background),
        "goal_pose": scene.goal_pose.to_list(),
        "boxes": [box.to_dict() for box in scene.boxes],
    }
    if scene.start_pose is not None:
        data["start_pose"] = scene.start_pose.to_list()
    if splats_path is not None:
        data["splats"] = splats_path
    return data


def scene_from_dict(data: dict[str, Any], base_dir: Optional[Path] = None) -> SceneModel:
    try:
        lo, hi = data["bounds"]
        boxes = tuple(
            Box.from_center(b["center"], b["size"], b.get("color", (0.5, 0.5, 0.5)), bool(b.get("obstacle", True)))
            for b in data.get("boxes", [])
        )
        splats = None
        if data.get("splats"):
            splat_path = Path(data["splats"])
            if base_dir is not None and not splat_path.is_absolute():
                splat_path = base_dir / splat_path
            splats = load_splats(splat_path)
        return SceneModel(
            bounds=Box(tuple(lo), tuple(hi), obstacle=False),
            boxes=boxes,
            goal_pose=Pose.from_list(data["goal_pose"]),
            background=tuple(data.get("background", (0.55, 0.65, 0.8))),
            splats=splats,
            start_pose=Pose.from_list(data["start_pose"]) if data.get("start_pose") else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, (ConfigurationError, SplatParseError)):
            raise
        raise ConfigurationError(f"Invalid scene description: {e}") from e


def load_scene(path: Union[str, Path]) -> SceneModel:
    path = Path(path)
    if not path.is_file():
        logger.error(f"Scene file not found: {path}")
        raise FileNotFoundError(f"Scene file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        logger.error(f"Scene file {path} is not valid JSON")
        raise ConfigurationError(f"Scene file {path} is not valid JSON: {e}") from e
    scene = scene_from_dict(data, base_dir=path.parent)
    logger.info(f"Loaded {scene.backend} scene from {path} with {len(scene.obstacles)} obstacles")
    return scene


def save_scene(path: Union[str, Path], scene: SceneModel, splats_path: Optional[str] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(scene_to_dict(scene, splats_path), ensure_ascii=True, indent=2), encoding="utf-8")
