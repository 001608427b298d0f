import math
import os
import sys
import unittest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from splatnav.config import CostConfig
from splatnav.core import Pose
from splatnav.errors import ConfigurationError
from splatnav.pathing import astar, build_lattice, optimal_cost, shortest_path_length
from splatnav.scene import Box, SceneModel

ARENA = Box((0.0, 0.0, 0.0), (10.0, 10.0, 2.0), obstacle=False)


def scene_with(*boxes, goal=Pose(4.0, 1.0, 1.0)):
    return SceneModel(bounds=ARENA, boxes=boxes, goal_pose=goal)


class TestShortestPath(unittest.TestCase):

    def test_straight_line(self):
        self.assertAlmostEqual(shortest_path_length(scene_with(), Pose(1.0, 1.0, 1.0), Pose(4.0, 1.0, 1.0), 0.3), 3.0)

    def test_diagonal(self):
        length = shortest_path_length(scene_with(), Pose(1.0, 1.0, 1.0), Pose(4.0, 4.0, 1.0), 0.3)
        self.assertAlmostEqual(length, 3.0 * math.sqrt(2.0))

    def test_vertical_offset(self):
        length = shortest_path_length(scene_with(), Pose(1.0, 1.0, 1.0), Pose(4.0, 1.0, 1.5), 0.3)
        self.assertAlmostEqual(length, math.hypot(3.0, 0.5))

    def test_detour_around_obstacle(self):
        scene = scene_with(Box((2.25, 0.0, 0.0), (2.75, 3.0, 2.0)), goal=Pose(4.0, 1.0, 1.0))
        length = shortest_path_length(scene, Pose(1.0, 1.0, 1.0), Pose(4.0, 1.0, 1.0), 0.3)
        # has to pass y = 3.3 at the wall, then come back down to y = 1
        self.assertGreater(length, 5.5)
        self.assertLess(length, 7.0)

    def test_low_obstacle_is_ignored(self):
        scene = scene_with(Box((2.0, 0.0, 0.0), (3.0, 10.0, 0.4)))
        self.assertAlmostEqual(shortest_path_length(scene, Pose(1.0, 1.0, 1.0), Pose(4.0, 1.0, 1.0), 0.3), 3.0)

    def test_unreachable_goal(self):
        scene = scene_with(Box((5.0, 0.0, 0.0), (5.5, 10.0, 2.0)), goal=Pose(8.0, 5.0, 1.0))
        with self.assertRaises(ConfigurationError):
            shortest_path_length(scene, Pose(2.0, 5.0, 1.0), scene.goal_pose, 0.3)

    def test_blocked_start(self):
        scene = scene_with(Box((2.0, 2.0, 0.0), (3.0, 3.0, 2.0)))
        lattice = build_lattice(scene, 0.3, 1.0)
        with self.assertRaises(ConfigurationError):
            astar(lattice, lattice.node_of(1.8, 2.5), lattice.node_of(4.0, 1.0))


class TestOptimalCost(unittest.TestCase):

    def test_scales_path_length(self):
        cost = optimal_cost(scene_with(), Pose(1.0, 1.0, 1.0), CostConfig())
        self.assertAlmostEqual(cost, 150.0)

    def test_start_at_goal(self):
        self.assertEqual(optimal_cost(scene_with(), Pose(4.0, 1.0, 1.0), CostConfig()), 0.0)


if __name__ == '__main__':
    unittest.main()
