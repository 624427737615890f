"""Seed plumbing: every random stream descends from one master seed."""

import secrets

import numpy as np


def seed_sequence(seed) -> np.random.SeedSequence:
    """Accept an int, None, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2**63)))
    return np.random.SeedSequence(seed)


def fresh_seed() -> int:
    return secrets.randbits(63)


def trial_seeds(seed, trials: int) -> list[int]:
    """Per-trial integer seeds, recorded in reports so any trial can be replayed."""
    rng = np.random.default_rng(seed_sequence(seed))
    return [int(s) for s in rng.integers(0, 2**63, size=trials, dtype=np.int64)]
