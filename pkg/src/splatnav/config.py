# -*- coding: utf-8 -*-
"""
config.py - Typed configuration for cameras, costs, the planner and episodes.

Values are resolved from the model defaults, then the bundled
`splatnav/data/defaults.toml`, then an optional user TOML file, then explicit
overrides (usually CLI flags). Validation failures surface as ConfigurationError.
"""

import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from importlib import resources
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from splatnav.errors import ConfigurationError

logger = logging.getLogger(__name__)

Difficulty = Literal["Easy", "Medium", "Hard"]
Strategy = Literal["BEINGS", "Directly", "Random", "BayesOnly", "MCMPCOnly"]
STRATEGIES: tuple[str, ...] = ("BEINGS", "Directly", "Random", "BayesOnly", "MCMPCOnly")
DIFFICULTIES: tuple[str, ...] = ("Easy", "Medium", "Hard")


class _Frozen(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CameraConfig(_Frozen):
    """Pinhole intrinsics. Focal lengths default to a 90 degree horizontal field of view."""
    width: int = Field(64, ge=8)
    height: int = Field(48, ge=8)
    fx: Optional[float] = Field(None, gt=0)
    fy: Optional[float] = Field(None, gt=0)
    cx: Optional[float] = None
    cy: Optional[float] = None

    def resolved(self) -> dict[str, float]:
        fx = self.fx if self.fx is not None else self.width / 2.0
        return {
            "width": self.width,
            "height": self.height,
            "fx": fx,
            "fy": self.fy if self.fy is not None else fx,
            "cx": self.cx if self.cx is not None else self.width / 2.0,
            "cy": self.cy if self.cy is not None else self.height / 2.0,
        }


class CostConfig(_Frozen):
    distance_rate: float = Field(50.0, gt=0)
    collision_penalty: float = Field(1000.0, gt=0)
    prob_floor: float = Field(1e-6, gt=0, lt=1)
    terminal_weight: float = Field(1.0, ge=0)
    robot_radius: float = Field(0.3, ge=0)
    temperature: Union[float, Literal["median", "spread"]] = "median"
    hard_block: bool = False

    @model_validator(mode="after")
    def _check_temperature(self):
        if not isinstance(self.temperature, str) and not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise ValueError(f"temperature must be positive and finite or 'median' or 'spread', got {self.temperature}")
        return self


class PlannerConfig(_Frozen):
    rollouts: int = Field(32, ge=2, description="N, number of control sequences")
    horizon: int = Field(5, ge=1, description="K, MPC horizon in steps")
    mutation_prob: float = Field(0.2, ge=0, le=1)
    magnitude_sigma: float = Field(0.15, ge=0)
    translation_bound: float = Field(1.0, gt=0)
    yaw_bound: float = Field(math.pi / 4, gt=0)
    seed: int = 0
    weighting: Literal["total", "stepwise"] = "total"
    workers: int = Field(1, ge=1, description="threads used for rollout evaluation")
    bayes_update: bool = True
    mc_scoring: bool = True
    elitism: bool = Field(False, description="carry the heaviest sequence over unmutated")
    stop_on_arrival: bool = Field(False, description="score rollouts only up to a predicted goal match")


class EpisodeConfig(_Frozen):
    difficulty: Optional[Difficulty] = "Easy"
    scene_path: Optional[str] = None
    strategy: Strategy = "BEINGS"
    max_steps: int = Field(50, ge=1)
    epsilon: float = Field(0.05, gt=0, lt=1)
    trials: int = Field(1, ge=1)
    seed: int = 0
    cell_size: float = Field(1.0, gt=0)
    measurement_noise: float = Field(0.0, ge=0)
    workers: int = Field(1, ge=1, description="processes used for independent trials")
    planner: PlannerConfig = PlannerConfig()
    cost: CostConfig = CostConfig()
    planner_camera: CameraConfig = CameraConfig()
    measurement_camera: CameraConfig = CameraConfig(width=256, height=192)

    @model_validator(mode="after")
    def _check_scene_source(self):
        if self.difficulty is None and self.scene_path is None:
            raise ValueError("Either difficulty or scene_path must be given")
        return self

    def with_strategy_flags(self) -> "EpisodeConfig":
        """Returns a copy whose planner switches match the chosen strategy."""
        flags = {
            "BEINGS": (True, True),
            "Directly": (True, False),
            "BayesOnly": (True, False),
            "MCMPCOnly": (False, True),
            "Random": (False, False),
        }[self.strategy]
        planner = self.planner.model_copy(update={"bayes_update": flags[0], "mc_scoring": flags[1]})
        return self.model_copy(update={"planner": planner})


def _deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_toml(path: Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"Invalid TOML in {path}: {e}") from e


def bundled_defaults() -> dict[str, Any]:
    """The `[episode]`-rooted defaults shipped in splatnav/data/defaults.toml."""
    text = resources.files("splatnav.data").joinpath("defaults.toml").read_text(encoding="utf-8")
    return tomllib.loads(text)


def _toml_to_episode_dict(data: dict[str, Any]) -> dict[str, Any]:
    episode = dict(data.get("episode", {}))
    for section in ("planner", "cost"):
        if section in data:
            episode[section] = data[section]
    camera = data.get("camera", {})
    if "planner" in camera:
        episode["planner_camera"] = camera["planner"]
    if "measurement" in camera:
        episode["measurement_camera"] = camera["measurement"]
    return episode


def build_episode_config(data: dict[str, Any]) -> EpisodeConfig:
    try:
        return EpisodeConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {e}") from e


def load_episode_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[dict[str, Any]] = None,
    use_bundled: bool = True,
) -> EpisodeConfig:
    """
    Resolves an EpisodeConfig from defaults, an optional TOML file and overrides.

    Args:
        path: Optional user TOML file with `[episode]`, `[planner]`, `[cost]`,
            `[camera.planner]` and `[camera.measurement]` tables.
        overrides: Nested dict in EpisodeConfig shape applied last.
        use_bundled: Whether to layer the bundled defaults.toml over the model defaults.

    Raises:
        ConfigurationError: On unreadable files or invalid values.
    """
    data: dict[str, Any] = {}
    if use_bundled:
        data = _toml_to_episode_dict(bundled_defaults())
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"Config file not found: {path}")
        data = _deep_merge(data, _toml_to_episode_dict(_read_toml(path)))
        logger.debug(f"Loaded configuration from {path}")
    if overrides:
        data = _deep_merge(data, overrides)
    return build_episode_config(data)
