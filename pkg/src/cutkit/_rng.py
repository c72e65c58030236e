"""Deterministic, splittable random streams.

Every stochastic routine draws from a counter-based Philox generator keyed
by ``(master seed, *integer tags)``, so results are a pure function of the
seed and the logical task id regardless of execution order.
"""
from __future__ import annotations

import numpy as np


def rng_stream(seed: int, *tags: int) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(t) & 0xFFFFFFFFFFFFFFFF for t in tags]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
