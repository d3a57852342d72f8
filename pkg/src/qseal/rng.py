"""Seed handling.

Every randomized routine takes an explicit ``numpy.random.Generator``. Streams
for parallel work are derived from ``(master_seed, index)`` with
``SeedSequence`` spawn keys, so a block of trials draws the same numbers no
matter which worker runs it or in what order.
"""

from __future__ import annotations

import numpy as np

Rng = np.random.Generator


def make_rng(seed: int | None) -> Rng:
    return np.random.default_rng(seed)


def stream(master_seed: int, *index: int) -> Rng:
    """Independent generator for the stream identified by ``index`` under ``master_seed``."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.PCG64(ss))


def stream_id(master_seed: int, *index: int) -> str:
    return ":".join(str(int(x)) for x in (master_seed, *index))
