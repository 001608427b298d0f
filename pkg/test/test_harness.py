import math
import os
import shutil
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from splatnav.belief import GridBelief
from splatnav.camera import Camera
from splatnav.config import CameraConfig, CostConfig, EpisodeConfig, PlannerConfig
from splatnav.core import CellGrid, Pose
from splatnav.errors import ConfigurationError
from splatnav.harness import (
    EpisodeResult,
    belief_grid,
    replay_cost,
    run_batch,
    run_episode,
    strategy_directly,
    summarize,
    trial_seeds,
)
from splatnav.motion import Channel
from splatnav.scene import Box, SceneModel, render
from splatnav.similarity import describe, dissimilarity
from splatnav.tasks import arena_walls, make_task
from splatnav.utils import read_episode_log, write_episode_log


def small_config(**updates):
    base = dict(
        difficulty="Medium",
        max_steps=3,
        planner=PlannerConfig(rollouts=4, horizon=2),
        cost=CostConfig(terminal_weight=100.0),
        planner_camera=CameraConfig(width=16, height=12),
        measurement_camera=CameraConfig(width=32, height=24),
    )
    base.update(updates)
    return EpisodeConfig(**base)


def result_of(success, total_cost, optimal, steps=5, ne=0.0):
    pose = Pose(0.0, 0.0, 1.0)
    return EpisodeResult(success=success, steps=steps, total_cost=total_cost, final_pose=pose, ne=ne,
                         trajectory=[pose], belief_snapshots=[], min_ne=ne, optimal_cost=optimal)


class TestSummarize(unittest.TestCase):

    def test_all_failures(self):
        summary = summarize([result_of(False, 100.0, 50.0), result_of(False, 10.0, 50.0)])
        self.assertEqual(summary["SR"], 0.0)
        self.assertEqual(summary["SPC"], 0.0)
        self.assertIsNone(summary["NS_min"])
        self.assertIsNone(summary["NS_mean"])

    def test_optimal_path(self):
        self.assertEqual(summarize([result_of(True, 75.0, 75.0)])["SPC"], 1.0)

    def test_twice_the_optimal_cost(self):
        self.assertAlmostEqual(summarize([result_of(True, 200.0, 100.0)])["SPC"], 0.5)

    def test_cheaper_than_lattice_optimum_is_capped(self):
        self.assertEqual(summarize([result_of(True, 90.0, 100.0)])["SPC"], 1.0)

    def test_zero_costs(self):
        self.assertEqual(summarize([result_of(True, 0.0, 0.0, steps=0)])["SPC"], 1.0)

    def test_mixed_batch(self):
        summary = summarize([
            result_of(True, 200.0, 100.0, steps=4, ne=0.1),
            result_of(False, 50.0, 100.0, steps=9, ne=2.0),
            result_of(True, 100.0, 100.0, steps=6, ne=0.3),
        ])
        self.assertAlmostEqual(summary["SR"], 2 / 3)
        self.assertAlmostEqual(summary["SPC"], 0.5)
        self.assertAlmostEqual(summary["NE"], 0.8)
        self.assertEqual(summary["NS_min"], 4)
        self.assertEqual(summary["NS_mean"], 5.0)
        self.assertEqual(summary["trials"], 3)

    def test_empty(self):
        with self.assertRaises(ValueError):
            summarize([])


class TestStrategyDirectly(unittest.TestCase):

    def setUp(self):
        self.scene, _ = make_task("Easy", 0)
        prior = np.zeros(100)
        prior[55] = 1.0  # center (5.5, 5.5)
        self.belief = GridBelief(CellGrid(), prior)

    def test_drives_when_facing_target(self):
        u = strategy_directly(self.scene, self.belief, Pose(2.5, 5.5, 1.0, 0.0))
        self.assertEqual((u.channel, u.magnitude), (Channel.VX, 1.0))
        u = strategy_directly(self.scene, self.belief, Pose(5.0, 5.5, 1.0, 0.0))
        self.assertEqual(u.channel, Channel.VX)
        self.assertAlmostEqual(u.magnitude, 0.5)

    def test_turns_first(self):
        u = strategy_directly(self.scene, self.belief, Pose(2.5, 5.5, 1.0, math.pi / 2))
        self.assertEqual(u.channel, Channel.YAW)
        self.assertAlmostEqual(u.magnitude, -math.pi / 4)
        u = strategy_directly(self.scene, self.belief, Pose(5.5, 5.0, 1.0, math.pi / 2 + 0.1))
        self.assertEqual(u.channel, Channel.YAW)
        self.assertAlmostEqual(u.magnitude, -0.1)

    def test_at_target(self):
        u = strategy_directly(self.scene, self.belief, Pose(5.5, 5.5, 1.0, 0.3))
        self.assertEqual((u.channel, u.magnitude), (Channel.VX, 0.0))


class TestRunEpisode(unittest.TestCase):

    def test_start_at_goal_succeeds_immediately(self):
        scene, _ = make_task("Medium", 5)
        result = run_episode(small_config(), 0, scene, scene.goal_pose)
        self.assertTrue(result.success)
        self.assertEqual(result.steps, 0)
        self.assertEqual(result.total_cost, 0.0)
        self.assertEqual(result.ne, 0.0)
        self.assertEqual(result.trajectory, [scene.goal_pose])
        self.assertIsNone(result.diagnostic)
        self.assertEqual(len(result.records), 1)

    def test_budget_exhaustion_and_replay(self):
        result = run_episode(small_config(), 1)
        self.assertLessEqual(result.steps, 3)
        self.assertEqual(len(result.trajectory), result.steps + 1)
        self.assertEqual(len(result.attempted), result.steps)
        self.assertEqual(len(result.belief_snapshots), len(result.dissimilarities))
        for masses in result.belief_snapshots:
            self.assertAlmostEqual(math.fsum(masses), 1.0, places=9)
        if not result.success:
            self.assertEqual(result.steps, 3)
            self.assertIn("budget", result.diagnostic)
        scene, _ = make_task("Medium", trial_seeds(0, 1)[0])
        self.assertEqual(replay_cost(scene, result, small_config()), result.total_cost)

    def test_blocked_steps_are_charged_but_not_executed(self):
        wall = Box((0.9, 0.0, 0.0), (1.1, 1.0, 2.0))
        scene = SceneModel(bounds=Box((0.0, 0.0, 0.0), (10.0, 10.0, 2.0), obstacle=False), boxes=arena_walls() + (wall,),
                           goal_pose=Pose(5.0, 5.0, 1.0))
        start = Pose(1.5, 0.5, 1.0, math.pi)
        result = run_episode(small_config(strategy="Directly", max_steps=2), 0, scene, start)
        self.assertFalse(result.success)
        self.assertEqual(result.collisions, 2)
        self.assertEqual(result.trajectory, [start, start, start])
        self.assertAlmostEqual(result.total_cost, 2 * 1050.0)
        self.assertAlmostEqual(replay_cost(scene, result, small_config()), result.total_cost)

    def test_textureless_goal_is_refused(self):
        # goal camera pressed against a single wall panel sees one flat color
        scene = SceneModel(bounds=Box((0.0, 0.0, 0.0), (10.0, 10.0, 2.0), obstacle=False), boxes=arena_walls(),
                           goal_pose=Pose(9.9, 9.0, 1.0, 0.0))
        with self.assertRaises(ConfigurationError):
            run_episode(small_config(strategy="Directly", max_steps=1), 0, scene, Pose(5.0, 5.0, 1.0))

    def test_reported_success_matches_final_view(self):
        cfg = small_config(difficulty="Easy", max_steps=4)
        camera = Camera.from_config(cfg.measurement_camera)
        for trial in range(3):
            with self.subTest(trial=trial):
                result = run_episode(cfg, trial)
                scene, _ = make_task("Easy", trial_seeds(cfg.seed, trial)[0])
                goal_desc = describe(render(scene, camera, scene.goal_pose))
                final = dissimilarity(goal_desc, describe(render(scene, camera, result.final_pose)))
                self.assertEqual(result.success, final < cfg.epsilon)
                self.assertAlmostEqual(final, result.dissimilarities[-1], places=12)

    def test_episode_is_deterministic(self):
        a = run_episode(small_config(strategy="BEINGS"), 2)
        b = run_episode(small_config(strategy="BEINGS"), 2)
        self.assertEqual(a.trajectory, b.trajectory)
        self.assertEqual(a.records, b.records)

    def test_every_strategy_runs(self):
        for strategy in ("BEINGS", "Directly", "Random", "BayesOnly", "MCMPCOnly"):
            with self.subTest(strategy=strategy):
                result = run_episode(small_config(strategy=strategy, max_steps=2), 0)
                self.assertEqual(result.strategy, strategy)
                self.assertLessEqual(result.steps, 2)

    def test_belief_stays_uniform_without_bayes(self):
        result = run_episode(small_config(strategy="MCMPCOnly", max_steps=2), 0)
        for masses in result.belief_snapshots:
            np.testing.assert_allclose(masses, np.full(100, 0.01))


class TestBatch(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_trial_seeds(self):
        self.assertEqual(trial_seeds(0, 3), trial_seeds(0, 3))
        self.assertNotEqual(trial_seeds(0, 3), trial_seeds(0, 4))
        self.assertEqual(len(set(trial_seeds(7, 0))), 3)

    def test_belief_grid_matches_arena(self):
        scene, _ = make_task("Easy", 0)
        self.assertEqual(belief_grid(scene, 1.0), CellGrid())
        self.assertEqual(belief_grid(scene, 0.5).size, 400)

    def test_batch_is_reproducible(self):
        cfg = small_config(trials=2, seed=11, max_steps=2)
        first, second = run_batch(cfg), run_batch(cfg)
        self.assertEqual(first.summary, second.summary)
        self.assertEqual([r.trial for r in first.results], [0, 1])
        for result in first.results:
            self.assertIsNotNone(result.optimal_cost)
            self.assertGreater(result.optimal_cost, 0.0)

        a = write_episode_log(os.path.join(self.test_dir, "a.jsonl"), first.results)
        b = write_episode_log(os.path.join(self.test_dir, "b.jsonl"), second.results)
        with open(a, "rb") as fa, open(b, "rb") as fb:
            self.assertEqual(fa.read(), fb.read())

        records = read_episode_log(a)
        self.assertEqual([r["type"] for r in records].count("result"), 2)
        self.assertEqual(records[-1]["trial"], 1)

    def test_process_pool_matches_serial(self):
        cfg = small_config(trials=2, seed=3, max_steps=2)
        serial = run_batch(cfg)
        pooled = run_batch(cfg.model_copy(update={"workers": 2}))
        self.assertEqual(serial.summary, pooled.summary)
        self.assertEqual([r.records for r in serial.results], [r.records for r in pooled.results])


if __name__ == '__main__':
    unittest.main()
