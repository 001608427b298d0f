# -*- coding: utf-8 -*-
"""
pathing.py - Shortest collision-free path length for the path-cost metric.

8-connected A* over a 0.1 m lattice covering the arena floor. Lattice nodes closer
than the robot radius to an obstacle footprint are blocked; only obstacles whose
vertical extent reaches the robot's height band take part.
"""

import heapq
import logging
import math
from dataclasses import dataclass

import numpy as np

from splatnav.config import CostConfig
from splatnav.core import Pose
from splatnav.errors import ConfigurationError
from splatnav.scene import SceneModel

logger = logging.getLogger(__name__)

LATTICE_STEP = 0.1

_MOVES = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)]


@dataclass(frozen=True)
class ObstacleLattice:
    """Boolean occupancy on lattice nodes origin + (i, j) * step, indexed [i, j] = [x, y]."""
    origin: tuple[float, float]
    step: float
    blocked: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.blocked.shape

    def node_of(self, x: float, y: float) -> tuple[int, int]:
        i = int(round((x - self.origin[0]) / self.step))
        j = int(round((y - self.origin[1]) / self.step))
        nx, ny = self.shape
        return min(max(i, 0), nx - 1), min(max(j, 0), ny - 1)

    def position(self, node: tuple[int, int]) -> tuple[float, float]:
        return self.origin[0] + node[0] * self.step, self.origin[1] + node[1] * self.step


def build_lattice(scene: SceneModel, robot_radius: float, height: float, step: float = LATTICE_STEP) -> ObstacleLattice:
    lo, hi = scene.bounds.lo, scene.bounds.hi
    xs = np.arange(lo[0], hi[0] + 0.5 * step, step)
    ys = np.arange(lo[1], hi[1] + 0.5 * step, step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    blocked = np.zeros(gx.shape, dtype=bool)
    for box in scene.obstacles:
        if box.hi[2] < height - robot_radius or box.lo[2] > height + robot_radius:
            continue
        dx = np.maximum(np.maximum(box.lo[0] - gx, 0.0), gx - box.hi[0])
        dy = np.maximum(np.maximum(box.lo[1] - gy, 0.0), gy - box.hi[1])
        blocked |= np.hypot(dx, dy) <= robot_radius
    return ObstacleLattice((float(lo[0]), float(lo[1])), step, blocked)


def _octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (math.sqrt(2.0) - 1.0) * min(dx, dy)


def astar(lattice: ObstacleLattice, start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]]:
    """
    Node path from start to goal, both inclusive.

    Raises:
        ConfigurationError: If either end is blocked or the goal is unreachable.
    """
    if lattice.blocked[start] or lattice.blocked[goal]:
        raise ConfigurationError(f"A* endpoint on a blocked lattice node: start {start}, goal {goal}")
    nx, ny = lattice.shape
    open_list = [(_octile(start, goal), start)]
    came_from: dict[tuple[int, int], tuple[int, int]] = {}
    g_score = {start: 0.0}
    closed = set()

    while open_list:
        current = heapq.heappop(open_list)[1]
        if current == goal:
            path = [current]
            while current in came_from:
                current = came_from[current]
                path.append(current)
            return path[::-1]
        if current in closed:
            continue
        closed.add(current)

        for dx, dy in _MOVES:
            neighbor = (current[0] + dx, current[1] + dy)
            if not (0 <= neighbor[0] < nx and 0 <= neighbor[1] < ny) or lattice.blocked[neighbor]:
                continue
            tentative_g = g_score[current] + math.sqrt(dx * dx + dy * dy)
            if tentative_g < g_score.get(neighbor, math.inf):
                came_from[neighbor] = current
                g_score[neighbor] = tentative_g
                heapq.heappush(open_list, (tentative_g + _octile(neighbor, goal), neighbor))
    raise ConfigurationError(f"Goal node {goal} is unreachable from {start}")


def shortest_path_length(scene: SceneModel, start: Pose, goal: Pose, robot_radius: float) -> float:
    """
    Length in meters of the shortest inflated-lattice path, including the snaps from the
    exact start and goal positions to their nearest nodes and the vertical offset.
    """
    lattice = build_lattice(scene, robot_radius, start.z)
    a, b = lattice.node_of(start.x, start.y), lattice.node_of(goal.x, goal.y)
    nodes = astar(lattice, a, b)
    points = [(start.x, start.y)] + [lattice.position(n) for n in nodes] + [(goal.x, goal.y)]
    planar = math.fsum(math.dist(p, q) for p, q in zip(points, points[1:]))
    return math.hypot(planar, goal.z - start.z)


def optimal_cost(scene: SceneModel, start: Pose, cfg: CostConfig) -> float:
    """C* = distance_rate * shortest path length from start to the goal pose."""
    if start.distance_to(scene.goal_pose) == 0.0:
        return 0.0
    length = shortest_path_length(scene, start, scene.goal_pose, cfg.robot_radius)
    logger.debug(f"Shortest path from {start} to goal: {length:.3f} m")
    return cfg.distance_rate * length
