"""Seed handling: every replication gets its own child stream."""

import numpy as np


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required for reproducible results")
    return np.random.SeedSequence(int(seed))


def child_generators(seed, count):
    return [np.random.default_rng(s) for s in seed_sequence(seed).spawn(count)]
