"""Deterministic seed derivation.

Every stochastic operation owns an rng derived from (master seed, call-site
tags), so concurrent trials and per-turn fits never share generator state and
results are independent of scheduling.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, *tags: int) -> int:
    """Stable 64-bit child seed for (master, tags); uses numpy SeedSequence."""
    entropy = [int(master) & _MASK64] + [int(t) & _MASK64 for t in tags]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
