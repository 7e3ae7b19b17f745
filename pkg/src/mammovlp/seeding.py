"""Deterministic seed derivation.

Every stochastic component takes an explicit seed. Child seeds are derived
from a master seed plus string tags through ``numpy.random.SeedSequence``,
so independent subsystems never share streams and runs replay exactly.
"""

from __future__ import annotations

import zlib

import numpy as np


def derive_seed(master: int, *tags: str | int) -> int:
    """Stable child seed for (master, tags). Result fits in 63 bits."""
    entropy = [int(master) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, int):
            entropy.append(tag & 0xFFFFFFFF)
        else:
            entropy.append(zlib.crc32(tag.encode("utf-8")))
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1] >> 1)


def rng_for(master: int, *tags: str | int) -> np.random.Generator:
    """NumPy generator seeded from :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(master, *tags))
