"""
Seeded random substreams.

All randomness in a run flows from one root seed. Components ask for a named
substream instead of sharing a generator, so adding a draw in one place never
shifts the numbers seen by another.
"""

import zlib
from typing import Tuple

import numpy as np


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8")) & 0xFFFFFFFF


class RandomStreams:
    """Factory of named, independent numpy generators"""

    def __init__(self, root_seed: int):
        if root_seed < 0:
            raise ValueError(f"root seed must be non-negative, got {root_seed}")
        self.root_seed = int(root_seed)

    def seed_sequence(self, name: str, *indices: int) -> np.random.SeedSequence:
        spawn_key: Tuple[int, ...] = (_name_key(name),) + tuple(int(i) for i in indices)
        return np.random.SeedSequence(entropy=self.root_seed, spawn_key=spawn_key)

    def generator(self, name: str, *indices: int) -> np.random.Generator:
        """Generator for the substream `name`, optionally indexed (episode, iteration, ...)"""
        return np.random.default_rng(self.seed_sequence(name, *indices))

    def seed(self, name: str, *indices: int) -> int:
        """Integer seed for APIs that take a plain seed"""
        return int(self.seed_sequence(name, *indices).generate_state(1, dtype=np.uint32)[0])
