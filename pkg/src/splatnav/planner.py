# -*- coding: utf-8 -*-
"""
planner.py - Monte Carlo model predictive control over control-sequence particles.

The control distribution is a weighted set of N control sequences of horizon K.
Every control step:

1. the real measurement updates the goal belief (unless it already matches the goal),
2. each sequence is propagated, its future views rendered and its cost turned into a weight,
3. the first input of the heaviest sequence is emitted,
4. sequences are resampled systematically in proportion to their weights, shifted by one
   step with a fresh tail input, and mutated to keep the set from degenerating.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from splatnav.belief import GridBelief, bayes_update, init_uniform
from splatnav.camera import Camera
from splatnav.config import CostConfig, PlannerConfig
from splatnav.core import CellGrid, Descriptor, Image, Pose
from splatnav.cost import RolloutEvaluation, batch_temperature, evaluate_rollout, scaled_weights
from splatnav.errors import ContractViolation, EnsembleCollapseError
from splatnav.motion import Channel, ControlBounds, ControlInput, ControlSequence, propagate
from splatnav.scene import SceneModel
from splatnav.similarity import Describer, describe, dissimilarity

logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class RolloutEnsemble:
    """
    N control sequences of horizon K stored as (N, K) channel and magnitude arrays.

    `rng` is the generator shared by every sampling step; `scored` tells whether
    `weights` came from a cost evaluation or are the uniform reset values.
    """
    channels: np.ndarray = field(repr=False)
    magnitudes: np.ndarray = field(repr=False)
    weights: np.ndarray
    rng: np.random.Generator = field(repr=False, compare=False)
    scored: bool = False
    costs: Optional[np.ndarray] = field(default=None, repr=False)
    ancestry: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.channels.shape != self.magnitudes.shape or self.channels.ndim != 2:
            raise ValueError("channels and magnitudes must be equally shaped (N, K) arrays")
        if len(self.weights) != self.channels.shape[0]:
            raise ValueError("one weight per sequence is required")

    @property
    def size(self) -> int:
        return self.channels.shape[0]

    @property
    def horizon(self) -> int:
        return self.channels.shape[1]

    def sequence(self, i: int) -> ControlSequence:
        return tuple(ControlInput(Channel(int(c)), float(m)) for c, m in zip(self.channels[i], self.magnitudes[i]))

    def sequences(self) -> list[ControlSequence]:
        return [self.sequence(i) for i in range(self.size)]


def bounds_of(cfg: PlannerConfig) -> ControlBounds:
    return ControlBounds(translation=cfg.translation_bound, yaw=cfg.yaw_bound)


def _channel_bounds(channels: np.ndarray, bounds: ControlBounds) -> np.ndarray:
    return np.where(channels == int(Channel.YAW), bounds.yaw, bounds.translation)


def _sample_inputs(rng: np.random.Generator, shape, bounds: ControlBounds) -> tuple[np.ndarray, np.ndarray]:
    """Channels uniform over {VX, VY, VZ, YAW} x {+, -}; magnitudes uniform in (0, bound]."""
    channels = rng.integers(0, 4, size=shape)
    signs = np.where(rng.integers(0, 2, size=shape) == 0, 1.0, -1.0)
    magnitudes = signs * _channel_bounds(channels, bounds) * (1.0 - rng.random(size=shape))
    return channels, magnitudes


def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def init_ensemble(cfg: PlannerConfig) -> RolloutEnsemble:
    """Draws N random sequences of length K from the seeded generator, uniformly weighted."""
    rng = np.random.default_rng(cfg.seed)
    channels, magnitudes = _sample_inputs(rng, (cfg.rollouts, cfg.horizon), bounds_of(cfg))
    return RolloutEnsemble(channels=channels, magnitudes=magnitudes, weights=_uniform(cfg.rollouts), rng=rng)


def normalize(raw: list[float]) -> np.ndarray:
    total = math.fsum(raw)
    if not total > 0 or not math.isfinite(total):
        raise EnsembleCollapseError(f"Rollout weights sum to {total}; every rollout was blocked or underflowed")
    return np.array([w / total for w in raw])


def _weights_from(evaluations: list[RolloutEvaluation], cost_cfg: CostConfig, weighting: str) -> np.ndarray:
    totals = [e.total for e in evaluations]
    temperature = batch_temperature(totals, cost_cfg)
    if weighting == "total":
        return normalize(scaled_weights(totals, temperature))
    finite = [c for e in evaluations for c in e.partial if math.isfinite(c)]
    offset = min(finite) if finite else 0.0
    return normalize([math.fsum(scaled_weights(e.partial, temperature, offset)) for e in evaluations])


def score(
    ensemble: RolloutEnsemble,
    s: Pose,
    scene: SceneModel,
    camera: Camera,
    goal_desc: Descriptor,
    belief: GridBelief,
    cost_cfg: CostConfig,
    cfg: Optional[PlannerConfig] = None,
    describer: Describer = describe,
    stop_below: Optional[float] = None,
) -> RolloutEnsemble:
    """
    Weights every sequence by its cost from pose s against read-only scene and belief snapshots.

    With `stop_below`, a sequence is scored only up to its first predicted view that
    matches the goal that closely.

    Raises:
        EnsembleCollapseError: If every weight is zero.
    """
    cfg = cfg or PlannerConfig(rollouts=ensemble.size, horizon=ensemble.horizon)
    sequences = ensemble.sequences()

    def evaluate(controls: ControlSequence) -> RolloutEvaluation:
        return evaluate_rollout(scene, camera, goal_desc, belief, propagate(s, controls), controls, cost_cfg, describer,
                                stop_below=stop_below)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            evaluations = list(pool.map(evaluate, sequences))
    else:
        evaluations = [evaluate(controls) for controls in sequences]

    weights = _weights_from(evaluations, cost_cfg, cfg.weighting)
    costs = np.array([e.total for e in evaluations])
    logger.debug(f"Scored {ensemble.size} rollouts: min cost {costs.min():.4g}, max weight {weights.max():.4f}")
    return replace(ensemble, weights=weights, scored=True, costs=costs)


def mark_unscored(ensemble: RolloutEnsemble) -> RolloutEnsemble:
    """Uniform weights standing in for scoring when rollout evaluation is switched off."""
    return replace(ensemble, weights=_uniform(ensemble.size), scored=True, costs=None)


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Ancestor indices from one uniform offset and N evenly spaced thresholds."""
    n = len(weights)
    positions = (np.arange(n) + rng.random()) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side="right")


def resample_and_shift(ensemble: RolloutEnsemble, cfg: PlannerConfig) -> RolloutEnsemble:
    """
    Resamples sequences in proportion to their weights, drops each survivor's first input,
    appends a freshly sampled tail input, then mutates: every input is replaced with
    probability mutation_prob and the rest get N(0, magnitude_sigma) magnitude noise,
    clamped to the channel bounds. Weights reset to uniform.

    With elitism on a scored ensemble, the first offspring of the heaviest sequence is
    shifted, given a zero-magnitude tail and left unmutated.
    """
    rng = ensemble.rng
    bounds = bounds_of(cfg)
    n = ensemble.size
    ancestry = systematic_resample(ensemble.weights, rng)
    channels = np.empty_like(ensemble.channels)
    magnitudes = np.empty_like(ensemble.magnitudes)
    channels[:, :-1] = ensemble.channels[ancestry, 1:]
    magnitudes[:, :-1] = ensemble.magnitudes[ancestry, 1:]
    channels[:, -1], magnitudes[:, -1] = _sample_inputs(rng, n, bounds)
    elite = None
    if cfg.elitism and ensemble.scored:
        # ancestry is non-decreasing and the heaviest sequence always has an offspring
        elite = int(np.searchsorted(ancestry, int(np.argmax(ensemble.weights))))
        elite_inputs = channels[elite].copy(), magnitudes[elite].copy()
        # zero-magnitude tail: the elite replays the previous plan
        elite_inputs[0][-1], elite_inputs[1][-1] = int(Channel.YAW), 0.0

    if cfg.mutation_prob > 0:
        replace_mask = rng.random(channels.shape) < cfg.mutation_prob
        fresh_channels, fresh_magnitudes = _sample_inputs(rng, channels.shape, bounds)
        channels = np.where(replace_mask, fresh_channels, channels)
        magnitudes = np.where(replace_mask, fresh_magnitudes, magnitudes)
    else:
        replace_mask = np.zeros(channels.shape, dtype=bool)
    if cfg.magnitude_sigma > 0:
        noise = rng.normal(0.0, cfg.magnitude_sigma, size=magnitudes.shape)
        magnitudes = np.where(replace_mask, magnitudes, magnitudes + noise)
    limit = _channel_bounds(channels, bounds)
    magnitudes = np.clip(magnitudes, -limit, limit)
    if elite is not None:
        channels[elite], magnitudes[elite] = elite_inputs
    return RolloutEnsemble(channels=channels, magnitudes=magnitudes, weights=_uniform(n), rng=rng,
                           scored=False, ancestry=ancestry)


def best_index(ensemble: RolloutEnsemble) -> int:
    if not ensemble.scored:
        raise ContractViolation("best_control needs a scored ensemble")
    return int(np.argmax(ensemble.weights))


def best_control(ensemble: RolloutEnsemble) -> ControlInput:
    """First input of the heaviest sequence; ties go to the lowest rollout index."""
    i = best_index(ensemble)
    return ControlInput(Channel(int(ensemble.channels[i, 0])), float(ensemble.magnitudes[i, 0]))


@dataclass(frozen=True)
class StepTelemetry:
    """What the planner saw and decided at one control step."""
    dissimilarity: float
    observed_cell: Optional[int]
    rollouts: list[list[list[float]]]
    weights: list[float]
    best: Optional[int]
    control: Optional[ControlInput]
    best_cost: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "dissimilarity": self.dissimilarity,
            "observed_cell": self.observed_cell,
            "weights": self.weights,
            "best_rollout": self.best,
            "best_cost": self.best_cost,
            "control": self.control.to_dict() if self.control else None,
            "rollouts": self.rollouts,
        }


@dataclass(frozen=True)
class PlannerState:
    """Everything the planner carries between control steps."""
    belief: GridBelief
    ensemble: RolloutEnsemble
    complete: bool = False
    last_dissimilarity: Optional[float] = None
    telemetry: Optional[StepTelemetry] = None


def init_planner_state(grid: CellGrid, cfg: PlannerConfig, belief: Optional[GridBelief] = None) -> PlannerState:
    return PlannerState(belief=belief or init_uniform(grid), ensemble=init_ensemble(cfg))


def observe(
    s: Pose,
    measurement: Image,
    state: PlannerState,
    goal_desc: Descriptor,
    epsilon: float,
    bayes: bool = True,
    describer: Describer = describe,
) -> tuple[PlannerState, Optional[int]]:
    """
    Compares the real measurement with the goal and, when it misses, folds it into the belief.

    Returns the new state (complete if the dissimilarity is below epsilon) and the observed cell.
    """
    d = dissimilarity(goal_desc, describer(measurement))
    if d < epsilon:
        logger.info(f"Goal view matched at {s} (D={d:.4f} < {epsilon})")
        return replace(state, complete=True, last_dissimilarity=d), None
    belief = state.belief
    cell = None
    if belief.grid.contains(s.x, s.y):
        cell = belief.grid.cell_of_xy(s.x, s.y)
        if bayes:
            belief = bayes_update(belief, cell, 1.0 - d)
    else:
        logger.warning(f"Measurement pose {s} lies outside the belief grid; belief left unchanged")
    return replace(state, belief=belief, last_dissimilarity=d), cell


def plan_step(
    s: Pose,
    measurement: Image,
    state: PlannerState,
    scene: SceneModel,
    camera: Camera,
    goal_desc: Descriptor,
    cfg: PlannerConfig,
    cost_cfg: CostConfig,
    epsilon: float,
    describer: Describer = describe,
) -> tuple[Optional[ControlInput], PlannerState]:
    """
    One receding-horizon control step.

    Returns (None, complete state) when the measurement already matches the goal,
    otherwise the control to execute and the evolved state.

    Raises:
        EnsembleCollapseError: Propagated from scoring.
    """
    state, cell = observe(s, measurement, state, goal_desc, epsilon, cfg.bayes_update, describer)
    if state.complete:
        return None, replace(state, telemetry=StepTelemetry(state.last_dissimilarity, None, [], [], None, None))

    if cfg.mc_scoring:
        scored = score(state.ensemble, s, scene, camera, goal_desc, state.belief, cost_cfg, cfg, describer,
                       stop_below=epsilon if cfg.stop_on_arrival else None)
    else:
        scored = mark_unscored(state.ensemble)
    best = best_index(scored)
    control = best_control(scored)
    rollouts = [[p.to_list() for p in propagate(s, controls)] for controls in scored.sequences()]
    telemetry = StepTelemetry(
        dissimilarity=state.last_dissimilarity,
        observed_cell=cell,
        rollouts=rollouts,
        weights=[float(w) for w in scored.weights],
        best=best,
        control=control,
        best_cost=None if scored.costs is None else float(scored.costs[best]),
    )
    logger.debug(f"Emitting {control.channel.name} {control.magnitude:+.3f} from rollout {best}")
    return control, replace(state, ensemble=resample_and_shift(scored, cfg), telemetry=telemetry)
