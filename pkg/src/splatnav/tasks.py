# -*- coding: utf-8 -*-
"""
tasks.py - Procedural Easy/Medium/Hard navigation tasks in a 10 x 10 x 2 m arena.

The arena is ringed by colored wall panels just outside its bounds so that every
heading sees a distinct view. Panels and the floor are decorative, not obstacles.
The goal image is whatever the scene renders at `goal_pose`, so a goal match is
always reachable. Goal cameras always look across open floor at the panels.
"""

import logging
import math

import numpy as np
from matplotlib.colors import hsv_to_rgb

from splatnav.config import DIFFICULTIES
from splatnav.core import Pose, wrap_angle
from splatnav.errors import ConfigurationError
from splatnav.scene import Box, SceneModel

logger = logging.getLogger(__name__)

ARENA_SIZE = (10.0, 10.0, 2.0)
CAMERA_HEIGHT = 1.0
OBSTACLE_SIZE = (0.5, 0.5, 1.5)
OBSTACLE_COLOR = (0.85, 0.45, 0.1)
FLOOR_COLOR = (0.35, 0.35, 0.35)
PANELS_PER_WALL = 5
WALL_THICKNESS = 0.2

# lateral obstacle offset from the segment, kept below half the obstacle width
MAX_LATERAL_JITTER = 0.15

WALL_MARGIN = 1.0
# open floor required in front of the goal camera
GOAL_VIEW_CLEARANCE = 2.5
MAX_LAYOUT_ATTEMPTS = 1000

_TASK_LAYOUT = {
    # start-goal distance, number of obstacles on the segment
    "Easy": (1.5, 0),
    "Medium": (4.0, 1),
    "Hard": (6.0, 3),
}


def _panel_color(index: int) -> tuple[float, float, float]:
    # golden-ratio hue spacing, alternate panels darker
    hue = (index * 0.61803398875) % 1.0
    value = 0.95 if index % 2 == 0 else 0.6
    return tuple(float(c) for c in hsv_to_rgb((hue, 0.8, value)))


def arena_walls() -> tuple[Box, ...]:
    """Floor slab plus colored wall panels surrounding the arena."""
    w, d, h = ARENA_SIZE
    t = WALL_THICKNESS
    boxes = [Box((0.0, 0.0, -t), (w, d, 0.0), FLOOR_COLOR, obstacle=False)]
    index = 0
    for wall in range(4):
        for i in range(PANELS_PER_WALL):
            a, b = i * w / PANELS_PER_WALL, (i + 1) * w / PANELS_PER_WALL
            lo, hi = {
                0: ((a, -t, 0.0), (b, 0.0, h)),
                1: ((w, a, 0.0), (w + t, b, h)),
                2: ((a, d, 0.0), (b, d + t, h)),
                3: ((-t, a, 0.0), (0.0, b, h)),
            }[wall]
            boxes.append(Box(lo, hi, _panel_color(index), obstacle=False))
            index += 1
    return tuple(boxes)


def _ahead_clearance(x: float, y: float, theta: float) -> float:
    """Distance from (x, y) to the arena wall along heading theta."""
    w, d, _ = ARENA_SIZE
    c, s = math.cos(theta), math.sin(theta)
    reach = []
    if c > 1e-12:
        reach.append((w - x) / c)
    elif c < -1e-12:
        reach.append(-x / c)
    if s > 1e-12:
        reach.append((d - y) / s)
    elif s < -1e-12:
        reach.append(-y / s)
    return min(reach)


def _inside(x: float, y: float) -> bool:
    w, d, _ = ARENA_SIZE
    return WALL_MARGIN <= x <= w - WALL_MARGIN and WALL_MARGIN <= y <= d - WALL_MARGIN


def _draw_layout(difficulty: str, distance: float, rng: np.random.Generator):
    w, d, _ = ARENA_SIZE
    sx = float(rng.uniform(WALL_MARGIN, w - WALL_MARGIN))
    sy = float(rng.uniform(WALL_MARGIN, d - WALL_MARGIN))
    if difficulty == "Easy":
        # goal straight behind the robot, its view turned a quarter turn away from the robot's
        start_theta = float(rng.uniform(-math.pi, math.pi))
        heading = wrap_angle(start_theta + math.pi)
        goal_theta = wrap_angle(start_theta + float(rng.choice([-1.0, 1.0])) * math.pi / 2)
    else:
        heading = float(rng.uniform(-math.pi, math.pi))
        goal_theta = heading
        start_theta = wrap_angle(heading + float(rng.uniform(-math.pi / 2, math.pi / 2)))
    gx, gy = sx + math.cos(heading) * distance, sy + math.sin(heading) * distance
    return Pose(sx, sy, CAMERA_HEIGHT, start_theta), Pose(gx, gy, CAMERA_HEIGHT, goal_theta), heading


def make_task(difficulty: str, seed: int = 0) -> tuple[SceneModel, Pose]:
    """
    Builds a seeded task scene and its start pose.

    Easy places the goal 1.5 m straight behind the robot with a clear line of sight;
    the goal view is turned a quarter turn from the robot's heading. Medium puts one
    0.5 x 0.5 x 1.5 m box across the middle of a 4 m start-goal segment. Hard puts
    three such boxes at a quarter, half and three quarters of a 6 m segment.

    Layouts are redrawn from the same generator until both poses sit at least 1 m
    inside the walls and the goal camera looks across at least 2.5 m of open floor,
    so the goal view always shows floor, wall panels and sky.

    Raises:
        ConfigurationError: On an unknown difficulty.
    """
    if difficulty not in _TASK_LAYOUT:
        raise ConfigurationError(f"Unknown difficulty {difficulty!r}; expected one of {DIFFICULTIES}")
    distance, n_obstacles = _TASK_LAYOUT[difficulty]
    rng = np.random.default_rng(seed)
    w, d, h = ARENA_SIZE

    for attempt in range(MAX_LAYOUT_ATTEMPTS):
        start, goal, heading = _draw_layout(difficulty, distance, rng)
        if _inside(goal.x, goal.y) and _ahead_clearance(goal.x, goal.y, goal.theta) >= GOAL_VIEW_CLEARANCE:
            break
    else:
        raise ConfigurationError(f"No {difficulty} layout found for seed {seed} in {MAX_LAYOUT_ATTEMPTS} draws")

    ux, uy = math.cos(heading), math.sin(heading)
    obstacles = []
    for i in range(n_obstacles):
        t = (i + 1) / (n_obstacles + 1)
        lateral = float(rng.uniform(-MAX_LATERAL_JITTER, MAX_LATERAL_JITTER))
        cx = start.x + ux * distance * t - uy * lateral
        cy = start.y + uy * distance * t + ux * lateral
        obstacles.append(Box.from_center((cx, cy, OBSTACLE_SIZE[2] / 2.0), OBSTACLE_SIZE, OBSTACLE_COLOR))

    scene = SceneModel(
        bounds=Box((0.0, 0.0, 0.0), (w, d, h), obstacle=False),
        boxes=arena_walls() + tuple(obstacles),
        goal_pose=goal,
        start_pose=start,
    )
    logger.debug(f"{difficulty} task (seed {seed}, {attempt + 1} draws): start {start}, goal {goal}, "
                 f"{n_obstacles} obstacles")
    return scene, start
