"""Splittable seeding: one master seed, many statistically independent streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SeededRng:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed < 2**64 and 0 <= self.stream_index < 2**64):
            raise ValueError("master_seed and stream_index must be 64-bit unsigned integers")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def stream(self, index: int) -> "SeededRng":
        return SeededRng(self.master_seed, index)


def as_generator(rng) -> np.random.Generator:
    """Accept a SeededRng, a numpy Generator or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return SeededRng(int(rng)).generator()
    raise TypeError(f"cannot make a generator from {type(rng).__name__}")


def stream_generators(master_seed: int, n: int, offset: int = 0) -> list[np.random.Generator]:
    """Generators for streams ``offset .. offset+n-1``; stream i is sample i's private source."""
    return [SeededRng(master_seed, offset + i).generator() for i in range(n)]
