"""Seedable randomness for the whole package.

Every stochastic routine takes a 64-bit master seed and derives one
independent stream per task from (master seed, task index) through a
fixed SplitMix64 mix.  Streams are backed by numpy's Philox generator,
a 64-bit counter-based generator, so results do not depend on how work
is sliced across shards or trials.

DEFAULT_SEED is the seed used by the command line when none is given.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 0x5EED

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One SplitMix64 scrambling round; maps uint64 -> uint64."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(master: int, index: int) -> int:
    """Per-task seed: mix the master seed with a task index.

    Two rounds keep nearby (master, index) pairs statistically
    unrelated; the mapping is fixed so written-down seeds stay valid.
    """
    return splitmix64(splitmix64(master & _MASK64) ^ ((index & _MASK64) * _GOLDEN & _MASK64))


def make_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for task `index` under `seed` (Philox, counter-based)."""
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, index)))
