# -*- coding: utf-8 -*-
"""
belief.py - Grid estimator of where the goal image was taken.

Holds a probability mass per floor cell and revises it after every real
measurement that did not reach the goal: the observed cell is discounted by the
miss probability (1 - q) and every other cell rises by the same normalizer.
Rendered rollout images never reach this module.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from splatnav.core import CellGrid, Pose
from splatnav.errors import DegenerateEvidenceError, OutOfBoundsError

logger = logging.getLogger(__name__)

Q_CAP = 1.0 - 1e-6
SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GridBelief:
    grid: CellGrid
    masses: np.ndarray = field(repr=False)

    def __post_init__(self):
        masses = np.array(self.masses, dtype=float, copy=True).ravel()
        if masses.size != self.grid.size:
            raise ValueError(f"Expected {self.grid.size} masses, got {masses.size}")
        if not np.all(np.isfinite(masses)) or masses.min() < 0.0:
            raise ValueError("Belief masses must be finite and non-negative")
        total = math.fsum(masses)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"Belief masses must sum to 1, got {total!r}")
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)

    @classmethod
    def from_prior(cls, grid: CellGrid, prior: Sequence[float]) -> "GridBelief":
        """Normalizes an arbitrary non-negative prior vector."""
        prior = np.asarray(prior, dtype=float)
        total = math.fsum(prior)
        if not total > 0:
            raise ValueError("Prior must have positive total mass")
        return cls(grid, prior / total)

    def argmax_cell(self) -> int:
        """Most likely cell; ties go to the lowest index."""
        return int(np.argmax(self.masses))

    def to_list(self) -> list[float]:
        return [float(m) for m in self.masses]


def init_uniform(grid: CellGrid) -> GridBelief:
    return GridBelief(grid, np.full(grid.size, 1.0 / grid.size))


def bayes_update(belief: GridBelief, observed_cell: int, q: float, clamp: bool = True) -> GridBelief:
    """
    Posterior after looking into `observed_cell` with detection probability q and not
    finding the goal.

    The observed mass becomes p(1 - q) / (1 - p q); every other mass r becomes r / (1 - p q).

    Args:
        belief: Current belief.
        observed_cell: Cell the robot measured from.
        q: Detection probability in [0, 1].
        clamp: Floor q at 0 and cap it at 1 - 1e-6 first, keeping the denominator away from 0.

    Raises:
        DegenerateEvidenceError: If p * q == 1, i.e. a certain detection that found nothing.
    """
    if not 0 <= observed_cell < belief.grid.size:
        raise OutOfBoundsError(f"Cell {observed_cell} outside [0, {belief.grid.size})")
    if not math.isfinite(q):
        raise ValueError(f"Detection probability must be finite, got {q!r}")
    if clamp:
        clamped = min(max(q, 0.0), Q_CAP)
        if clamped != q:
            logger.warning(f"Detection probability {q} clamped to {clamped}")
        q = clamped
    elif not 0.0 <= q <= 1.0:
        raise ValueError(f"Detection probability must lie in [0, 1], got {q}")

    p = float(belief.masses[observed_cell])
    if q == 0.0 or p == 0.0:
        return belief
    denominator = 1.0 - p * q
    if denominator <= 0.0:
        raise DegenerateEvidenceError(
            f"Cell {observed_cell} holds mass {p} and detection probability is {q}, yet the goal was not found"
        )
    masses = belief.masses / denominator
    masses[observed_cell] = p * (1.0 - q) / denominator
    return GridBelief(belief.grid, masses)


def prob_mass(belief: GridBelief, pose: Pose) -> float:
    """Mass of the cell containing the pose; zero outside the grid footprint."""
    if not belief.grid.contains(pose.x, pose.y):
        return 0.0
    return float(belief.masses[belief.grid.cell_of_xy(pose.x, pose.y)])


def belief_entropy(belief: GridBelief, base: Optional[float] = None) -> float:
    """Shannon entropy of the masses, logged per step as a convergence signal."""
    m = belief.masses[belief.masses > 0]
    h = float(-np.sum(m * np.log(m)))
    return h / math.log(base) if base else h
