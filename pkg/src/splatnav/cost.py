# -*- coding: utf-8 -*-
"""
cost.py - Scalar objectives of the planner.

movement_cost charges distance and collisions, exploration_cost divides it by
how likely the next pose is to hold and to see the goal, rollout_cost sums the
exploration terms along a predicted trajectory and adds the terminal
dissimilarity of the rendered final view.
"""

import logging
import math
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

from splatnav.belief import GridBelief, prob_mass
from splatnav.camera import Camera
from splatnav.config import CostConfig
from splatnav.core import Descriptor, Pose
from splatnav.errors import ContractViolation
from splatnav.motion import ControlInput, propagate
from splatnav.scene import SceneModel, render, segment_collides
from splatnav.similarity import Describer, describe, dissimilarity

logger = logging.getLogger(__name__)


def _charge(scene: SceneModel, s: Pose, s_next: Pose, cfg: CostConfig) -> tuple[float, bool]:
    collided = segment_collides(scene, s, s_next, cfg.robot_radius)
    cost = cfg.distance_rate * s.distance_to(s_next)
    if collided:
        cost += cfg.collision_penalty
    return cost, collided


def movement_cost(scene: SceneModel, s: Pose, s_next: Pose, cfg: CostConfig) -> float:
    """distance_rate * |displacement| plus collision_penalty if the move collides or leaves the arena."""
    return _charge(scene, s, s_next, cfg)[0]


def exploration_cost(c_move: float, p_next: float, q_next: float, cfg: CostConfig) -> float:
    """c_move / (max(p_next, floor) * max(q_next, floor))."""
    if c_move == 0.0:
        return 0.0
    return c_move / (max(p_next, cfg.prob_floor) * max(q_next, cfg.prob_floor))


def weight(j: float) -> float:
    """Unnormalized rollout weight exp(-J); +inf maps to 0."""
    if j == math.inf:
        return 0.0
    return math.exp(-j)


@dataclass
class RolloutEvaluation:
    """Cost breakdown of one rollout, with the partial costs used by stepwise weighting."""
    total: float
    terminal_dissimilarity: float
    partial: list[float] = field(default_factory=list)
    collided: bool = False


def evaluate_rollout(
    scene: SceneModel,
    camera: Camera,
    goal_desc: Descriptor,
    belief: GridBelief,
    trajectory: Sequence[Pose],
    controls: Sequence[ControlInput],
    cfg: CostConfig,
    describer: Describer = describe,
    stop_below: Optional[float] = None,
) -> RolloutEvaluation:
    """
    Scores a predicted trajectory against rendered views of its future poses.

    partial[k] is the cost the rollout would have if it stopped after k+1 steps:
    exploration terms so far plus the dissimilarity at pose k+1.

    With `stop_below`, the first future view whose dissimilarity falls below it ends
    the rollout: that step is charged its plain movement cost and later steps repeat
    its partial cost.

    Raises:
        ContractViolation: If the trajectory is not propagate(trajectory[0], controls).
    """
    if len(trajectory) != len(controls) + 1:
        raise ContractViolation(f"Trajectory has {len(trajectory)} poses for {len(controls)} controls")
    if propagate(trajectory[0], controls) != list(trajectory):
        raise ContractViolation("Trajectory does not match the propagated controls")

    running = 0.0
    collided = False
    partial: list[float] = []
    terminal = None
    for k in range(len(controls)):
        s, s_next = trajectory[k], trajectory[k + 1]
        c_move, hit = _charge(scene, s, s_next, cfg)
        collided = collided or hit
        terminal = dissimilarity(goal_desc, describer(render(scene, camera, s_next)))
        if stop_below is not None and terminal < stop_below:
            running += c_move
            partial.extend([running + cfg.terminal_weight * terminal] * (len(controls) - k))
            break
        q_next = 1.0 - terminal
        running += exploration_cost(c_move, prob_mass(belief, s_next), q_next, cfg)
        partial.append(running + cfg.terminal_weight * terminal)
    if terminal is None:
        terminal = dissimilarity(goal_desc, describer(render(scene, camera, trajectory[0])))
    total = running + cfg.terminal_weight * terminal
    if cfg.hard_block and collided:
        total = math.inf
        partial = [math.inf] * len(partial)
    return RolloutEvaluation(total=total, terminal_dissimilarity=terminal, partial=partial, collided=collided)


def rollout_cost(
    scene: SceneModel,
    camera: Camera,
    goal_desc: Descriptor,
    belief: GridBelief,
    trajectory: Sequence[Pose],
    controls: Sequence[ControlInput],
    cfg: CostConfig,
    describer: Describer = describe,
) -> float:
    """terminal_weight * D(goal, final view) + sum of exploration costs along the trajectory."""
    return evaluate_rollout(scene, camera, goal_desc, belief, trajectory, controls, cfg, describer).total


def batch_temperature(costs: Sequence[float], cfg: CostConfig) -> float:
    """
    Temperature dividing costs before exponentiation.

    A number is used as is. "median" is the median finite cost of the batch; "spread" is
    the median distance of the finite costs above the batch minimum, unaffected by
    an offset shared by every cost.
    """
    if not isinstance(cfg.temperature, str):
        return float(cfg.temperature)
    finite = [c for c in costs if math.isfinite(c)]
    if not finite:
        return 1.0
    if cfg.temperature == "spread":
        low = min(finite)
        gaps = [c - low for c in finite if c > low]
        # rollouts tied at the minimum are left out
        value = statistics.median(gaps) if gaps else 0.0
    else:
        value = statistics.median(finite)
    if not value > 0:
        logger.warning(f"Batch {cfg.temperature} {value} unusable as temperature; using 1.0")
        return 1.0
    return value


def scaled_weights(costs: Sequence[float], temperature: float, offset: Optional[float] = None) -> list[float]:
    """exp(-(J - offset) / temperature) per cost; offset defaults to the minimum finite cost."""
    if offset is None:
        finite = [c for c in costs if math.isfinite(c)]
        offset = min(finite) if finite else 0.0
    return [weight((c - offset) / temperature) if math.isfinite(c) else 0.0 for c in costs]

