"""Counter-based random streams.

Every draw in a run comes from a Philox generator keyed by the run seed and a
tuple of integer labels (stage, sweep point, pulse batch).  Streams therefore
do not depend on execution order or on how batches are spread over workers.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stage ids
PAIRS = 1
RAMAN = 2
DARK = 3
ROUTE = 4
DETECT = 5
HERALD = 6
COUPLER = 7
BLOCK_A = 8
BLOCK_B = 9


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def label_key(*labels: int) -> int:
    h = 0x243F6A8885A308D3
    for lab in labels:
        h = _splitmix64(h ^ (int(lab) & MASK64))
    return h


def stream(seed: int, *labels: int) -> np.random.Generator:
    if not 0 <= seed <= MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    key = np.array([seed, label_key(*labels)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
