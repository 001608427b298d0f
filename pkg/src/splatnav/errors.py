# -*- coding: utf-8 -*-
"""
errors.py - Exception hierarchy for splatnav.

Every failure the library raises on purpose derives from SplatNavError, so the
command-line tools can map them onto structured JSON error codes in one place.
"""

from typing import Optional


class SplatNavError(Exception):
    """Base class for all splatnav errors."""


class AngleError(SplatNavError, ValueError):
    """A non-finite angle was supplied."""


class OutOfBoundsError(SplatNavError, ValueError):
    """A pose fell outside the cell grid footprint."""


class DimensionMismatchError(SplatNavError, ValueError):
    """Two descriptors of different dimension were compared."""


class DegenerateEvidenceError(SplatNavError, ValueError):
    """A certain detection (p_i * q == 1) was reported for a cell that did not contain the target."""


class ContractViolation(SplatNavError, RuntimeError):
    """A caller broke an operation's precondition."""


class EnsembleCollapseError(SplatNavError, RuntimeError):
    """Every rollout weight became zero after scoring."""


class ConfigurationError(SplatNavError, ValueError):
    """Invalid configuration, scene file, or an unreachable goal."""


class SplatParseError(SplatNavError, ValueError):
    """A splat PLY file could not be parsed."""

    def __init__(self, message: str, record: Optional[int] = None):
        if record is not None:
            message = f"record {record}: {message}"
        super().__init__(message)
        self.record = record
