#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
This module provides the artifact writers shared by the splatnav tools:
episode logs, batch summary tables, view images, and the translation of
command-line flags into configuration overrides.
"""

import csv
import json
import logging
from argparse import ArgumentParser, BooleanOptionalAction, Namespace
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from matplotlib.image import imsave

from splatnav.config import DIFFICULTIES, STRATEGIES
from splatnav.core import Image
from splatnav.harness import EpisodeResult

logger = logging.getLogger(__name__)

BATCH_COLUMNS = ("SR", "SPC", "NE", "NS_min", "NS_mean", "min_NE", "trials")

# (argparse destination, path inside the EpisodeConfig dict)
_FLAG_PATHS = {
    "difficulty": ("difficulty",),
    "scene": ("scene_path",),
    "strategy": ("strategy",),
    "max_steps": ("max_steps",),
    "epsilon": ("epsilon",),
    "trials": ("trials",),
    "seed": ("seed",),
    "workers": ("workers",),
    "measurement_noise": ("measurement_noise",),
    "cell_size": ("cell_size",),
    "rollouts": ("planner", "rollouts"),
    "horizon": ("planner", "horizon"),
    "mutation_prob": ("planner", "mutation_prob"),
    "magnitude_sigma": ("planner", "magnitude_sigma"),
    "weighting": ("planner", "weighting"),
    "elitism": ("planner", "elitism"),
    "stop_on_arrival": ("planner", "stop_on_arrival"),
    "planner_workers": ("planner", "workers"),
    "distance_rate": ("cost", "distance_rate"),
    "collision_penalty": ("cost", "collision_penalty"),
    "robot_radius": ("cost", "robot_radius"),
    "terminal_weight": ("cost", "terminal_weight"),
    "temperature": ("cost", "temperature"),
    "hard_block": ("cost", "hard_block"),
    "planner_width": ("planner_camera", "width"),
    "planner_height": ("planner_camera", "height"),
    "measurement_width": ("measurement_camera", "width"),
    "measurement_height": ("measurement_camera", "height"),
}


def overrides_from_args(args: Namespace) -> dict[str, Any]:
    """
    Nested EpisodeConfig overrides for every flag the user actually set.

    A scene file replaces the generated task, so it also clears the difficulty.
    """
    overrides: dict[str, Any] = {}
    for dest, keys in _FLAG_PATHS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if dest == "temperature" and value not in ("median", "spread"):
            value = float(value)
        node = overrides
        for key in keys[:-1]:
            node = node.setdefault(key, {})
        node[keys[-1]] = value
    if overrides.get("scene_path") and "difficulty" not in overrides:
        overrides["difficulty"] = None
    return overrides


def episode_records(result: EpisodeResult) -> Iterable[dict[str, Any]]:
    for record in result.records:
        yield {"type": "step", "trial": result.trial, **record}
    yield {"type": "result", **result.summary()}


def write_episode_log(path: Union[str, Path], results: Iterable[EpisodeResult]) -> Path:
    """Writes one JSON record per line: every step of every episode, then its result."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for result in results:
            for record in episode_records(result):
                f.write(json.dumps(record, ensure_ascii=True, sort_keys=True))
                f.write("\n")
    logger.info(f"Wrote episode log to {path}")
    return path


def read_episode_log(path: Union[str, Path]) -> list[dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_batch_csv(path: Union[str, Path], summary: dict[str, Any], extra: Optional[dict[str, Any]] = None) -> Path:
    """Writes the batch summary as a one-row CSV; `extra` columns (strategy, difficulty) come first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    extra = extra or {}
    row = {**extra, **{column: summary.get(column) for column in BATCH_COLUMNS}}
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(row))
        writer.writeheader()
        writer.writerow({key: "" if value is None else value for key, value in row.items()})
    logger.info(f"Wrote batch summary to {path}")
    return path


def save_image_png(path: Union[str, Path], image: Image) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    imsave(path, image.to_uint8(), format="png")
    return path


def add_episode_arguments(parser: ArgumentParser, batch: bool = False) -> None:
    """Flags mirroring EpisodeConfig fields; unset flags leave file and default values alone."""
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--difficulty", choices=DIFFICULTIES, help="Generated task difficulty.")
    source.add_argument("--scene", help="Path to a JSON scene file with a start_pose.")
    parser.add_argument("--config", help="TOML file with [episode], [planner], [cost] and [camera.*] tables.")
    parser.add_argument("--strategy", choices=STRATEGIES, help="Planner strategy or baseline.")
    parser.add_argument("--seed", type=int, required=batch, help="Master seed for tasks, planner and noise.")
    parser.add_argument("--max-steps", type=int, help="Step budget per episode.")
    parser.add_argument("--epsilon", type=float, help="Success threshold on the goal dissimilarity.")
    parser.add_argument("--measurement-noise", type=float, help="Std. dev. of pixel noise on real measurements.")
    parser.add_argument("--cell-size", type=float, help="Belief grid cell edge in meters.")
    parser.add_argument("--rollouts", type=int, help="Number of control sequences N.")
    parser.add_argument("--horizon", type=int, help="MPC horizon K.")
    parser.add_argument("--mutation-prob", type=float, help="Probability of replacing an input when resampling.")
    parser.add_argument("--magnitude-sigma", type=float, help="Std. dev. of magnitude noise when resampling.")
    parser.add_argument("--weighting", choices=["total", "stepwise"], help="Rollout weighting mode.")
    parser.add_argument("--elitism", action=BooleanOptionalAction, default=None,
                        help="Carry the heaviest sequence over unmutated.")
    parser.add_argument("--stop-on-arrival", action=BooleanOptionalAction, default=None,
                        help="Score rollouts only up to their first predicted goal match.")
    parser.add_argument("--planner-workers", type=int, help="Threads used to evaluate rollouts.")
    parser.add_argument("--distance-rate", type=float, help="Movement cost per meter.")
    parser.add_argument("--collision-penalty", type=float, help="Cost added to a colliding move.")
    parser.add_argument("--robot-radius", type=float, help="Robot radius used for collisions (m).")
    parser.add_argument("--terminal-weight", type=float, help="Weight of the terminal dissimilarity.")
    parser.add_argument("--temperature", help="Weight temperature: a positive number, 'median' or 'spread'.")
    parser.add_argument("--hard-block", action=BooleanOptionalAction, default=None,
                        help="Give colliding rollouts zero weight.")
    parser.add_argument("--planner-width", type=int, help="Planner camera width in pixels.")
    parser.add_argument("--planner-height", type=int, help="Planner camera height in pixels.")
    parser.add_argument("--measurement-width", type=int, help="Measurement camera width in pixels.")
    parser.add_argument("--measurement-height", type=int, help="Measurement camera height in pixels.")
    if batch:
        parser.add_argument("--trials", type=int, help="Number of independent trials.")
        parser.add_argument("--workers", type=int, help="Processes used to run trials.")
