# -*- coding: utf-8 -*-
"""
motion.py - Discrete-time blimp kinematics.

The blimp is driven by one body-frame velocity channel at a time. Velocities are
expressed per step, so a command is added straight onto the state after rotating
the planar part into the inertial frame.
"""

import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

from splatnav.core import Pose

logger = logging.getLogger(__name__)


class Channel(IntEnum):
    VX = 0
    VY = 1
    VZ = 2
    YAW = 3


@dataclass(frozen=True)
class ControlBounds:
    """Per-channel magnitude limits: meters/step for translation, radians/step for yaw."""
    translation: float = 1.0
    yaw: float = math.pi / 4

    def __post_init__(self):
        if not (self.translation > 0 and self.yaw > 0):
            raise ValueError(f"Control bounds must be positive, got {self}")

    def bound(self, channel: Channel) -> float:
        return self.yaw if channel == Channel.YAW else self.translation

    def clamp(self, channel: Channel, magnitude: float) -> float:
        limit = self.bound(channel)
        return min(max(float(magnitude), -limit), limit)


@dataclass(frozen=True)
class ControlInput:
    """A single active velocity channel with its signed magnitude."""
    channel: Channel
    magnitude: float

    def __post_init__(self):
        object.__setattr__(self, "channel", Channel(self.channel))
        magnitude = float(self.magnitude)
        if not math.isfinite(magnitude):
            raise ValueError(f"Control magnitude must be finite, got {magnitude!r}")
        object.__setattr__(self, "magnitude", magnitude)

    def within(self, bounds: ControlBounds) -> bool:
        return abs(self.magnitude) <= bounds.bound(self.channel) + 1e-12

    def to_dict(self) -> dict:
        return {"channel": self.channel.name, "magnitude": self.magnitude}


ControlSequence = tuple[ControlInput, ...]


def make_sequence(inputs: Iterable[ControlInput]) -> ControlSequence:
    return tuple(inputs)


def step(s: Pose, u: ControlInput) -> Pose:
    """
    Advances the pose by one control input.

    Planar velocities are rotated by the current yaw; VZ adds to altitude; YAW adds to
    heading (wrapped). Exactly one of these deltas is nonzero.
    """
    m = u.magnitude
    if u.channel == Channel.YAW:
        return Pose(s.x, s.y, s.z, s.theta + m)
    if u.channel == Channel.VZ:
        return Pose(s.x, s.y, s.z + m, s.theta)
    c, sn = math.cos(s.theta), math.sin(s.theta)
    if u.channel == Channel.VX:
        return Pose(s.x + c * m, s.y + sn * m, s.z, s.theta)
    return Pose(s.x - sn * m, s.y + c * m, s.z, s.theta)


def propagate(s0: Pose, controls: Sequence[ControlInput]) -> list[Pose]:
    """Returns the K+1 poses visited by applying the controls in order, starting with s0."""
    trajectory = [s0]
    for u in controls:
        trajectory.append(step(trajectory[-1], u))
    return trajectory
