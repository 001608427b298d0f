# -*- coding: utf-8 -*-
"""
harness.py - Episode orchestration, baselines and batch metrics.

An episode loops measure -> plan -> execute until the measured view matches the
goal image within epsilon or the step budget runs out. Strategies differ only in
which planner switches are on, except `Directly`, which steers greedily toward
the most likely belief cell instead of planning.

Batch metrics:

    SR      successes / trials
    SPC     mean over trials of success_i * C*_i / max(C_i, C*_i)
    NE      mean final distance to the goal position
    NS_min  fewest steps among successful trials (NS_mean alongside)
    min_NE  mean over trials of the smallest distance to the goal along the path
"""

import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from splatnav.belief import GridBelief, belief_entropy
from splatnav.camera import Camera
from splatnav.config import EpisodeConfig
from splatnav.core import CellGrid, Image, Pose, wrap_angle
from splatnav.cost import movement_cost
from splatnav.errors import ConfigurationError, EnsembleCollapseError
from splatnav.motion import Channel, ControlBounds, ControlInput, step
from splatnav.pathing import optimal_cost
from splatnav.planner import (
    PlannerState, StepTelemetry, bounds_of, init_ensemble, init_planner_state, observe, plan_step,
)
from splatnav.scene import SceneModel, load_scene, render, segment_collides
from splatnav.similarity import describe, is_textureless
from splatnav.tasks import make_task

logger = logging.getLogger(__name__)

BEARING_TOLERANCE = 1e-9
POSITION_TOLERANCE = 1e-9


@dataclass
class EpisodeResult:
    success: bool
    steps: int
    total_cost: float
    final_pose: Pose
    ne: float
    trajectory: list[Pose]
    belief_snapshots: list[list[float]] = field(repr=False)
    collisions: int = 0
    min_ne: float = 0.0
    dissimilarities: list[float] = field(default_factory=list)
    attempted: list[Pose] = field(default_factory=list)
    diagnostic: Optional[str] = None
    optimal_cost: Optional[float] = None
    strategy: str = "BEINGS"
    trial: int = 0
    records: list[dict[str, Any]] = field(default_factory=list, repr=False)

    def summary(self) -> dict[str, Any]:
        return {
            "trial": self.trial,
            "strategy": self.strategy,
            "success": self.success,
            "steps": self.steps,
            "total_cost": self.total_cost,
            "optimal_cost": self.optimal_cost,
            "ne": self.ne,
            "min_ne": self.min_ne,
            "collisions": self.collisions,
            "final_pose": self.final_pose.to_list(),
            "diagnostic": self.diagnostic,
        }


def trial_seeds(seed: int, trial: int) -> tuple[int, int, int]:
    """Independent (task, planner, measurement noise) seeds for one trial."""
    task_seed, planner_seed, noise_seed = np.random.SeedSequence([seed, trial]).generate_state(3)
    return int(task_seed), int(planner_seed), int(noise_seed)


def resolve_task(cfg: EpisodeConfig, task_seed: int) -> tuple[SceneModel, Pose]:
    """Scene and start pose from the configured scene file, or a generated task."""
    if cfg.scene_path is not None:
        scene = load_scene(cfg.scene_path)
        if scene.start_pose is None:
            raise ConfigurationError(f"Scene file {cfg.scene_path} has no start_pose")
        return scene, scene.start_pose
    return make_task(cfg.difficulty, task_seed)


def belief_grid(scene: SceneModel, cell_size: float) -> CellGrid:
    lo, hi = scene.bounds.lo, scene.bounds.hi
    nx = max(1, math.ceil((hi[0] - lo[0]) / cell_size - 1e-9))
    ny = max(1, math.ceil((hi[1] - lo[1]) / cell_size - 1e-9))
    return CellGrid(origin=(lo[0], lo[1]), cell_size=cell_size, nx=nx, ny=ny)


def strategy_directly(
    scene: SceneModel, belief: GridBelief, s: Pose, bounds: ControlBounds = ControlBounds()
) -> ControlInput:
    """
    Greedy waypoint baseline: turn toward the center of the most likely cell, then drive
    straight at it. Obstacles are ignored.
    """
    tx, ty = belief.grid.cell_center(belief.argmax_cell())
    dx, dy = tx - s.x, ty - s.y
    distance = math.hypot(dx, dy)
    if distance <= POSITION_TOLERANCE:
        return ControlInput(Channel.VX, 0.0)
    error = wrap_angle(math.atan2(dy, dx) - s.theta)
    if abs(error) > BEARING_TOLERANCE:
        return ControlInput(Channel.YAW, bounds.clamp(Channel.YAW, error))
    return ControlInput(Channel.VX, min(distance, bounds.translation))


def measure(scene: SceneModel, camera: Camera, pose: Pose, noise: float, rng: np.random.Generator) -> Image:
    """The real camera: a render of the scene, optionally with Gaussian pixel noise."""
    image = render(scene, camera, pose)
    if noise <= 0:
        return image
    noisy = image.pixels + rng.normal(0.0, noise, size=image.pixels.shape)
    return Image(np.clip(noisy, 0.0, 1.0))


def run_episode(
    cfg: EpisodeConfig,
    trial: int = 0,
    scene: Optional[SceneModel] = None,
    start: Optional[Pose] = None,
) -> EpisodeResult:
    """
    Runs one episode with the configured strategy.

    A step that collides or leaves the arena is charged but not executed; the robot stays put.
    Ensemble collapse re-seeds the ensemble once; a second collapse in the same step ends the
    episode as a failure with a diagnostic.

    Raises:
        ConfigurationError: If there is no start pose or the goal view is textureless.
    """
    cfg = cfg.with_strategy_flags()
    task_seed, planner_seed, noise_seed = trial_seeds(cfg.seed, trial)
    if scene is None:
        scene, task_start = resolve_task(cfg, task_seed)
        start = start or task_start
    elif start is None:
        start = scene.start_pose
    if start is None:
        raise ConfigurationError("Episode needs a start pose")

    planner_cfg = cfg.planner.model_copy(update={"seed": planner_seed})
    planner_camera = Camera.from_config(cfg.planner_camera)
    measurement_camera = Camera.from_config(cfg.measurement_camera)
    noise_rng = np.random.default_rng(noise_seed)
    goal_view = render(scene, measurement_camera, scene.goal_pose)
    if is_textureless(goal_view):
        # a flat goal view matches every other flat view
        raise ConfigurationError(f"Goal view at {scene.goal_pose} has no texture to match against")
    goal_desc = describe(goal_view)
    grid = belief_grid(scene, cfg.cell_size)
    state = init_planner_state(grid, planner_cfg)
    bounds = bounds_of(planner_cfg)

    s = start
    trajectory, attempted = [s], []
    step_costs: list[float] = []
    dissimilarities: list[float] = []
    snapshots: list[list[float]] = []
    records: list[dict[str, Any]] = []
    collisions = 0
    diagnostic = None
    logger.info(f"Episode {trial} ({cfg.strategy}): start {s}, goal {scene.goal_pose}")

    for k in range(cfg.max_steps + 1):
        measurement = measure(scene, measurement_camera, s, cfg.measurement_noise, noise_rng)
        try:
            control, state = _decide(cfg, s, measurement, state, scene, planner_camera, goal_desc, bounds)
        except EnsembleCollapseError as e:
            logger.warning(f"Step {k}: {e}; re-seeding the ensemble")
            reseeded = planner_cfg.model_copy(update={"seed": planner_seed + k + 1})
            state = PlannerState(belief=state.belief, ensemble=init_ensemble(reseeded))
            try:
                control, state = _decide(cfg, s, measurement, state, scene, planner_camera, goal_desc, bounds)
            except EnsembleCollapseError as again:
                diagnostic = f"planner collapse at step {k}: {again}"
                logger.error(diagnostic)
                break
        dissimilarities.append(state.last_dissimilarity)
        snapshots.append(state.belief.to_list())
        record: dict[str, Any] = {
            "step": k,
            "pose": s.to_list(),
            "dissimilarity": state.last_dissimilarity,
            "belief": snapshots[-1],
            "belief_entropy": belief_entropy(state.belief),
        }
        if state.telemetry is not None:
            record.update({key: value for key, value in state.telemetry.to_dict().items() if key != "dissimilarity"})
        if state.complete or k == cfg.max_steps:
            record["control"] = None
            records.append(record)
            break

        target = step(s, control)
        c = movement_cost(scene, s, target, cfg.cost)
        blocked = segment_collides(scene, s, target, cfg.cost.robot_radius)
        step_costs.append(c)
        attempted.append(target)
        if blocked:
            collisions += 1
        else:
            s = target
        trajectory.append(s)
        record.update({"control": control.to_dict(), "attempted": target.to_list(), "cost": c, "collided": blocked})
        records.append(record)
        logger.debug(f"Step {k}: {control.channel.name} {control.magnitude:+.3f} -> {s} (cost {c:.1f})")

    success = state.complete
    goal_position = scene.goal_pose.position
    ne = float(np.linalg.norm(s.position - goal_position))
    min_ne = min(float(np.linalg.norm(p.position - goal_position)) for p in trajectory)
    if not success and diagnostic is None:
        diagnostic = f"step budget of {cfg.max_steps} exhausted"
    logger.info(f"Episode {trial} finished: success={success}, steps={len(attempted)}, NE={ne:.3f}")
    return EpisodeResult(
        success=success,
        steps=len(attempted),
        total_cost=math.fsum(step_costs),
        final_pose=s,
        ne=ne,
        trajectory=trajectory,
        belief_snapshots=snapshots,
        collisions=collisions,
        min_ne=min_ne,
        dissimilarities=dissimilarities,
        attempted=attempted,
        diagnostic=None if success else diagnostic,
        strategy=cfg.strategy,
        trial=trial,
        records=records,
    )


def _decide(cfg: EpisodeConfig, s: Pose, measurement: Image, state: PlannerState, scene: SceneModel,
            camera: Camera, goal_desc, bounds: ControlBounds) -> tuple[Optional[ControlInput], PlannerState]:
    if cfg.strategy != "Directly":
        return plan_step(s, measurement, state, scene, camera, goal_desc, cfg.planner, cfg.cost, cfg.epsilon)
    state, cell = observe(s, measurement, state, goal_desc, cfg.epsilon, cfg.planner.bayes_update)
    if state.complete:
        return None, state
    control = strategy_directly(scene, state.belief, s, bounds)
    telemetry = StepTelemetry(state.last_dissimilarity, cell, [], [], None, control)
    return control, PlannerState(state.belief, state.ensemble, False, state.last_dissimilarity, telemetry)


def replay_cost(scene: SceneModel, result: EpisodeResult, cfg: EpisodeConfig) -> float:
    """Recomputes total_cost from the logged realized and attempted poses."""
    return math.fsum(
        movement_cost(scene, s, target, cfg.cost) for s, target in zip(result.trajectory, result.attempted)
    )


def _run_trial(cfg: EpisodeConfig, trial: int) -> EpisodeResult:
    task_seed = trial_seeds(cfg.seed, trial)[0]
    scene, start = resolve_task(cfg, task_seed)
    c_star = optimal_cost(scene, start, cfg.cost)
    result = run_episode(cfg, trial, scene, start)
    result.optimal_cost = c_star
    return result


def path_cost_ratio(result: EpisodeResult) -> float:
    if not result.success:
        return 0.0
    c, c_star = result.total_cost, result.optimal_cost
    if c_star is None:
        raise ValueError("Episode result carries no optimal cost")
    denominator = max(c, c_star)
    return 1.0 if denominator == 0.0 else c_star / denominator


def summarize(results: list[EpisodeResult]) -> dict[str, Any]:
    """Aggregates trial results in trial order."""
    if not results:
        raise ValueError("Cannot summarize an empty batch")
    n = len(results)
    successes = [r for r in results if r.success]
    steps = [r.steps for r in successes]
    return {
        "SR": len(successes) / n,
        "SPC": math.fsum(path_cost_ratio(r) for r in results) / n,
        "NE": math.fsum(r.ne for r in results) / n,
        "NS_min": min(steps) if steps else None,
        "NS_mean": statistics.fmean(steps) if steps else None,
        "min_NE": math.fsum(r.min_ne for r in results) / n,
        "trials": n,
    }


@dataclass
class BatchResult:
    summary: dict[str, Any]
    results: list[EpisodeResult] = field(repr=False)


def run_batch(cfg: EpisodeConfig) -> BatchResult:
    """
    Runs cfg.trials independent trials, in worker processes when cfg.workers > 1.

    Raises:
        ConfigurationError: If a trial's goal is unreachable on the inflated lattice.
    """
    trials = list(range(cfg.trials))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_trial, [cfg] * len(trials), trials))
    else:
        results = [_run_trial(cfg, t) for t in trials]
    summary = summarize(results)
    logger.info(f"Batch of {cfg.trials} {cfg.strategy} trials: SR={summary['SR']:.2f}, SPC={summary['SPC']:.3f}")
    return BatchResult(summary=summary, results=results)
