"""
Seeded, counter-based random streams.

Every generator is a numpy Philox keyed by SeedSequence(seed, spawn_key).
A shot or a sampling chunk always gets the same stream no matter which
worker runs it or in what order, so results depend only on (seed, shots).
"""

import numpy as np

SHOT_STREAM = 0
CHUNK_STREAM = 1
RUN_STREAM = 2


def _generator(seed, *spawn_key):
    if seed is None or int(seed) < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.Philox(sequence))


def shot_rng(seed, shot):
    return _generator(seed, SHOT_STREAM, shot)


def chunk_rng(seed, chunk):
    return _generator(seed, CHUNK_STREAM, chunk)


def run_rng(seed):
    return _generator(seed, RUN_STREAM)


def chunk_sizes(shots, chunk):
    """Split ``shots`` into fixed-size chunks; the last one may be short."""
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    full, rest = divmod(shots, chunk)
    sizes = [chunk] * full
    if rest:
        sizes.append(rest)
    return sizes
