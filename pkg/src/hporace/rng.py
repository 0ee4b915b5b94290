"""Named random sub-streams derived from a single run seed.

Every source of randomness in a run (initial design, per-trial proposals,
objective noise, surrogate fitting restarts) pulls from its own stream so
that concurrency and call order never change results.
"""

from __future__ import annotations

import numpy as np

# Stream labels; values are part of the reproducibility contract.
DESIGN = 0
PROPOSAL = 1
NOISE = 2
FIT = 3


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the sub-stream identified by ``key`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))
