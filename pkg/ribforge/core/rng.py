"""
Seeded random streams.

All randomness goes through numpy's Philox-4x64 counter-based generator seeded
from a SeedSequence built from the integer seed plus optional integer keys, so
the same (seed, keys) gives the same stream on every platform. The global
numpy/random module state is never used.
"""
import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"RNG keys must be non-negative, got {key}")
    return int(key)


def make_rng(seed: int, *keys: Key) -> np.random.Generator:
    """Return a Philox generator for ``seed`` and the sub-stream named by ``keys``"""
    if seed is None:
        raise ValueError("a seed is mandatory for random streams")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    entropy = [int(seed)] + [_key_to_int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *keys: Key) -> int:
    """Derive a child u63 seed deterministically"""
    return int(make_rng(seed, *keys).integers(0, 2**63 - 1))
