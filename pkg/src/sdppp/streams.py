"""Counter-based, replicate-indexed random streams.

Replicate i of a run keyed by ``seed`` always consumes the stream
``replicate_stream(seed, i)``, so results do not depend on scheduling,
chunking, or worker count.  The mixing function is numpy's SeedSequence
applied to the pair (seed, index), feeding a Philox counter-based
generator.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

SEED_MASK = (1 << 63) - 1


def replicate_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for replicate ``index`` of run ``seed``."""
    ss = np.random.SeedSequence(entropy=(int(seed) & SEED_MASK, int(index)))
    return np.random.Generator(np.random.Philox(key=ss.generate_state(2, np.uint64)))


def derive_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit run key from an existing generator."""
    return int(rng.integers(0, SEED_MASK, dtype=np.int64))


def replicate_map(fn, reps: int, seed: int, threads: int = 1) -> list:
    """Evaluate ``fn(rng_i)`` for i = 0..reps-1 on per-replicate streams.

    The returned list is in replicate order whatever ``threads`` is, so any
    order-independent aggregation of it is bit-reproducible.
    """
    if threads <= 1:
        return [fn(replicate_stream(seed, i)) for i in range(reps)]
    out: list = [None] * reps

    def run(i: int) -> None:
        out[i] = fn(replicate_stream(seed, i))

    with ThreadPoolExecutor(max_workers=threads) as ex:
        # consume the iterator to surface worker exceptions
        list(ex.map(run, range(reps)))
    return out
