"""Deterministic random-stream derivation.

Every stochastic quantity in the package draws from a PCG64 generator whose
seed is an integer path (root seed, experiment id, sweep point, repetition,
channel). Identical paths give identical streams on every platform and for
any execution order, which is what makes sweep results mergeable by
(point, repetition) index regardless of scheduling.
"""

from __future__ import annotations

import numpy as np

# Channel indices separating independent noise sources inside one repetition.
CHANNEL_DETECTOR_A = 0
CHANNEL_DETECTOR_B = 1
CHANNEL_SOURCE_RIN = 2
CHANNEL_VIBRATION = 3
CHANNEL_SERVO_FLOOR = 4

_MASK64 = (1 << 64) - 1


def seed_path(*path: int) -> tuple[int, ...]:
    """Normalize a seed path to the non-negative integers SeedSequence takes."""
    return tuple(int(p) & _MASK64 for p in path)


def stream(*path: int) -> np.random.Generator:
    """PCG64 generator for the given integer path."""
    return np.random.default_rng(np.random.SeedSequence(list(seed_path(*path))))
