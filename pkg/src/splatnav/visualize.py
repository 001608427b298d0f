# -*- coding: utf-8 -*-
"""
visualize.py - Top-down episode plots.
"""

import logging
import math
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from splatnav.core import CellGrid  # noqa: E402
from splatnav.harness import EpisodeResult  # noqa: E402
from splatnav.scene import SceneModel  # noqa: E402

logger = logging.getLogger(__name__)

ARROW_LENGTH = 0.4


def _last_fan(result: EpisodeResult) -> tuple[list[list[list[float]]], Optional[int]]:
    for record in reversed(result.records):
        if record.get("rollouts"):
            return record["rollouts"], record.get("best_rollout")
    return [], None


def plot_episode(scene: SceneModel, result: EpisodeResult, grid: CellGrid, path: Union[str, Path]) -> Path:
    """
    Writes an SVG of the arena seen from above: belief shading per cell, obstacles,
    the realized trajectory, the goal pose and the rollout fan of the last planning step.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lo, hi = scene.bounds.lo, scene.bounds.hi

    fig, ax = plt.subplots(figsize=(7, 7))
    if result.belief_snapshots:
        masses = [result.belief_snapshots[-1][r * grid.nx:(r + 1) * grid.nx] for r in range(grid.ny)]
        xmin, xmax, ymin, ymax = grid.extent
        im = ax.imshow(masses, cmap="Blues", origin="lower", extent=(xmin, xmax, ymin, ymax), vmin=0.0)
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04, label="belief mass")

    for box in scene.obstacles:
        ax.add_patch(Rectangle((box.lo[0], box.lo[1]), box.hi[0] - box.lo[0], box.hi[1] - box.lo[1],
                               facecolor=box.color, edgecolor="black", linewidth=0.8))

    rollouts, best = _last_fan(result)
    for i, rollout in enumerate(rollouts):
        xs, ys = [p[0] for p in rollout], [p[1] for p in rollout]
        if i == best:
            ax.plot(xs, ys, color="tab:green", linewidth=1.8, zorder=4)
        else:
            ax.plot(xs, ys, color="gray", linewidth=0.5, alpha=0.6, zorder=3)

    ax.plot([p.x for p in result.trajectory], [p.y for p in result.trajectory], "o-", color="tab:red",
            markersize=3, linewidth=1.2, label="trajectory", zorder=5)
    goal = scene.goal_pose
    ax.plot(goal.x, goal.y, "*", color="gold", markeredgecolor="black", markersize=14, label="goal", zorder=6)
    ax.arrow(goal.x, goal.y, ARROW_LENGTH * math.cos(goal.theta), ARROW_LENGTH * math.sin(goal.theta),
             width=0.03, color="black", zorder=6)
    final = result.final_pose
    ax.arrow(final.x, final.y, ARROW_LENGTH * math.cos(final.theta), ARROW_LENGTH * math.sin(final.theta),
             width=0.03, color="tab:red", zorder=6)

    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    outcome = "success" if result.success else "failure"
    ax.set_title(f"{result.strategy} trial {result.trial}: {outcome} in {result.steps} steps, NE {result.ne:.2f} m")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote episode plot to {path}")
    return path
