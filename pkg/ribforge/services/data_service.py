"""
Phantom dataset generation
"""
import logging
from pathlib import Path
from typing import Dict, Union

from ribforge.core.errors import ConfigError
from ribforge.core.rng import derive_seed
from ribforge.data.dataset_io import write_splits
from ribforge.data.phantom import generate_phantom
from ribforge.data.split import MIN_SAMPLES, split_dataset
from ribforge.data.types import PhantomDataset
from ribforge.schemas.configs import PhantomConfig
from ribforge.utils.logger import log_duration

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "val", "test")


def generate_dataset(n: int, seed: int, cfg: PhantomConfig) -> PhantomDataset:
    """``n`` real phantoms; sample ``i`` uses seed derive_seed(seed, "sample", i)"""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    samples = []
    for i in range(n):
        sample = generate_phantom(derive_seed(seed, "sample", i), cfg)
        sample.sample_id = f"phantom_{i:05d}"
        samples.append(sample)
    return PhantomDataset(samples, name="phantoms")


def generate_splits(n: int, seed: int, cfg: PhantomConfig) -> Dict[str, PhantomDataset]:
    if n < MIN_SAMPLES:
        raise ConfigError(f"--n {n} is below the split minimum of {MIN_SAMPLES}")
    dataset = generate_dataset(n, seed, cfg)
    parts = split_dataset(dataset.samples, seed)
    return {name: PhantomDataset(list(part), name=name) for name, part in zip(SPLIT_NAMES, parts)}


def write_phantom_dataset(out: Union[str, Path], n: int, seed: int, cfg: PhantomConfig) -> Dict[str, PhantomDataset]:
    """Generate, split 6:2:2 and write ``out/<split>/...`` plus ``out/splits.json``"""
    with log_duration("gen-data", logger):
        try:
            splits = generate_splits(n, seed, cfg)
            write_splits(out, splits)
        except Exception as e:
            logger.error(f"Dataset generation failed: {e}")
            raise
    sizes = ", ".join(f"{name} {len(ds)}" for name, ds in splits.items())
    logger.info(f"Generated {n} phantoms ({cfg.image_size}x{cfg.image_size}, seed {seed}): {sizes}")
    return splits
