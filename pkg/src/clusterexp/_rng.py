"""Seed handling: every randomized entry point accepts either an integer
seed, a SeedSequence, or a Generator, and derives child streams
deterministically so stages are independently replayable."""

from __future__ import annotations

import numpy as np


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def child_seeds(master_seed, n: int) -> list[np.random.SeedSequence]:
    if isinstance(master_seed, np.random.SeedSequence):
        return master_seed.spawn(n)
    return np.random.SeedSequence(master_seed).spawn(n)
