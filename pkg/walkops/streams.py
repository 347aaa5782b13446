"""Counter-based random streams.

A stream is a numpy ``Generator`` over a Philox bit generator whose key is
folded from the run seed and a path of integers (quantity, block, environment).
Two streams with the same key produce the same draws no matter which thread
consumes them or in which order.
"""

from typing import Iterable

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(value: int) -> int:
    """splitmix64 finalizer on a Python int."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *path: int) -> int:
    state = mix64(seed)
    for item in path:
        state = mix64(state + GOLDEN_GAMMA + (item & MASK64))
    return state


def _fold(path: Iterable[int]) -> int:
    state = 0
    for item in path:
        state = mix64(state ^ (item & MASK64)) + GOLDEN_GAMMA
    return state & MASK64


def generator(seed: int, *stream: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = (seed & MASK64) | (_fold(stream) << 64)
    return np.random.Generator(np.random.Philox(key=key))
