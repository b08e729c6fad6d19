"""
Seeded 6:2:2 train/val/test split
"""
from typing import List, Sequence, Tuple, TypeVar

from ribforge.core.errors import ConfigError
from ribforge.core.rng import make_rng

T = TypeVar("T")

MIN_SAMPLES = 5


def split_sizes(n: int) -> Tuple[int, int, int]:
    train = (6 * n) // 10
    val = (2 * n) // 10
    return train, val, n - train - val


def split_dataset(samples: Sequence[T], seed: int) -> Tuple[List[T], List[T], List[T]]:
    """Shuffle by seed, then cut floor(0.6n) / floor(0.2n) / remainder"""
    n = len(samples)
    if n < MIN_SAMPLES:
        raise ConfigError(f"need at least {MIN_SAMPLES} samples to split, got {n}")
    order = make_rng(seed, "split").permutation(n)
    n_train, n_val, _ = split_sizes(n)
    shuffled = [samples[i] for i in order]
    return shuffled[:n_train], shuffled[n_train:n_train + n_val], shuffled[n_train + n_val:]
