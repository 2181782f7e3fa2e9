"""
Seed streams for reproducible Monte Carlo work.

Every random draw in the solver comes from a numpy Generator derived from the
single master seed and a key path such as ("sampling", "round", 3, chunk).
String labels are hashed to stable integers so keys survive process restarts.
"""
import hashlib
from typing import Tuple, Union

import numpy as np

KeyPart = Union[int, str]


def _key_int(part: KeyPart) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream key parts must be non-negative, got {part}")
        return int(part)
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


class SeedStreams:
    """A master seed plus a key path; derives independent generators."""

    def __init__(self, master_seed: int, key: Tuple[int, ...] = ()):
        self.master_seed = int(master_seed)
        self.key = tuple(key)

    def child(self, *parts: KeyPart) -> "SeedStreams":
        """Return the streams under a longer key path."""
        return SeedStreams(self.master_seed, self.key + tuple(_key_int(p) for p in parts))

    def generator(self, index: int = 0) -> np.random.Generator:
        """Return the generator for stream `index` under this key path."""
        sequence = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.key + (_key_int(index),))
        return np.random.default_rng(sequence)

    def __repr__(self) -> str:
        return f"SeedStreams(master_seed={self.master_seed}, key={self.key})"
