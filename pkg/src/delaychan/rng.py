"""Deterministic random-stream derivation.

Every experiment draws all of its randomness from one base seed. Named
substreams are derived with numpy's SeedSequence spawn keys (PCG64
underneath), so channel randomness, adversary randomness and message
draws never share a stream and any single trial can be reproduced in
isolation from (base_seed, trial_index).
"""

from __future__ import annotations

import numpy as np

# Fixed stream ids; the spawn key of a trial substream is (trial, stream).
MESSAGE_STREAM = 0
DELAY_STREAM = 1
NOISE_STREAM = 2
ADVERSARY_STREAM = 3


def substream(base_seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream named by ``path``.

    Identical (base_seed, path) always yields an identical stream;
    distinct paths yield statistically independent streams.
    """
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=tuple(path)))


def stream_id(base_seed: int, *path: int) -> int:
    """Stable 64-bit identifier of a substream, used in trial records."""
    ss = np.random.SeedSequence(base_seed, spawn_key=tuple(path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def as_generator(seed_or_rng) -> np.random.Generator:
    """Accept either a seed or an existing Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)
