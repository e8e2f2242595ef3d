"""Seeded random streams.

Every stream is a Mersenne Twister (numpy ``MT19937``) seeded through
``SeedSequence(master_seed, spawn_key=(index,))``. Streams for different
indices are statistically independent, and a given ``(master_seed, index)``
pair yields the same sequence on every platform, so batch work can be split
across threads without changing results.
"""
from __future__ import annotations

import numpy as np

__all__ = ["rng_stream", "DEFAULT_SEED"]

DEFAULT_SEED = 20120101


def rng_stream(master_seed: int, index: int = 0) -> np.random.Generator:
    if master_seed < 0 or index < 0:
        raise ValueError("seed and stream index must be non-negative")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.MT19937(seq))
