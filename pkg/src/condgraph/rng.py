"""Seeded random streams: one independent generator per (seed, chain id)."""

from __future__ import annotations

import numpy as np


def make_rng(seed=None, chain_id: int = 0) -> np.random.Generator:
    """PCG64 generator keyed on ``(seed, chain_id)``.

    Chains with different ids draw from non-overlapping SeedSequence children,
    so a run is reproducible from the seed alone.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(seed, spawn_key=(int(chain_id),))
    return np.random.Generator(np.random.PCG64(ss))


def chain_rngs(seed, k: int) -> list[np.random.Generator]:
    return [make_rng(seed, i) for i in range(k)]
