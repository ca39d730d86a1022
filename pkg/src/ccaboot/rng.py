"""Reproducible random substreams keyed by integer tuples.

Every unit of work (a bootstrap replicate, a Monte-Carlo replicate) draws
from its own generator derived from ``(seed, *key)``, so results do not
depend on how work is scheduled across workers.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in key)))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit seed for the child stream ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
