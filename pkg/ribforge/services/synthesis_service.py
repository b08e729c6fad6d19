"""
Stage 3: affine mask synthesis followed by image generation
"""
import logging
from typing import List, Sequence

import numpy as np

from ribforge.core.errors import ConfigError, ShapeError
from ribforge.core.rng import derive_seed, make_rng
from ribforge.data.affine import affine_transform_maskset, round_robin_order, sample_affine_params
from ribforge.data.dataset_io import dequantize_image, quantize_image
from ribforge.data.types import MaskSet, PhantomDataset, Sample
from ribforge.models import Generator, ModelWeights, load_module_weights
from ribforge.schemas.configs import AffineRanges, GeneratorConfig
from ribforge.tensor import no_grad
from ribforge.utils.logger import log_duration
from .training import PREDICT_BATCH, to_image_range

logger = logging.getLogger(__name__)


def load_generator(gen_weights: ModelWeights, gen_cfg: GeneratorConfig) -> Generator:
    # Init values are overwritten by the loaded weights
    generator = Generator(gen_cfg, make_rng(0, "init", "generator"))
    load_module_weights(generator, gen_weights)
    return generator.eval()


def synthesize_pairs(
    gen_weights: ModelWeights,
    source_masksets: Sequence[MaskSet],
    n_out: int,
    seed: int,
    ranges: AffineRanges,
    gen_cfg: GeneratorConfig,
    batch_size: int = PREDICT_BATCH,
) -> PhantomDataset:
    """New (image, masks) pairs: transformed source masks and G's rendering of them

    Sources are visited round-robin over a seeded permutation; output ``i``
    draws its affine parameters from its own stream, so outputs do not depend
    on batch size. Images pass through 8-bit quantization to match the
    on-disk format of real samples.
    """
    if n_out < 1:
        raise ConfigError(f"n_out must be >= 1, got {n_out}")
    if not source_masksets:
        raise ConfigError("no source masks to synthesize from")
    for masks in source_masksets:
        if masks.groups != gen_cfg.groups:
            raise ShapeError(
                f"source masks have channels {masks.groups.counts()}, generator expects {gen_cfg.groups.counts()}"
            )

    with log_duration("synthesis", logger):
        try:
            generator = load_generator(gen_weights, gen_cfg)
            order = round_robin_order(len(source_masksets), n_out, seed)
            new_masks: List[MaskSet] = []
            for i, src in enumerate(order):
                params = sample_affine_params(make_rng(seed, "affine", i), ranges)
                new_masks.append(affine_transform_maskset(source_masksets[src], params))

            samples: List[Sample] = []
            with no_grad():
                for start in range(0, n_out, batch_size):
                    chunk = new_masks[start:start + batch_size]
                    stacked = np.stack([m.stack() for m in chunk]).astype(np.float32)
                    images = to_image_range(generator(stacked).data)
                    for k, (masks, image) in enumerate(zip(chunk, images)):
                        i = start + k
                        samples.append(Sample(
                            image=dequantize_image(quantize_image(image)),
                            masks=masks,
                            provenance="synthetic",
                            seed=derive_seed(seed, "synthetic", i),
                            sample_id=f"synthetic_{i:05d}",
                        ))
                    logger.debug(f"synthesized {len(samples)}/{n_out}")
        except Exception as e:
            logger.error(f"Synthesis failed: {e}")
            raise

    logger.info(f"Synthesized {n_out} pairs from {len(source_masksets)} source mask sets (seed {seed})")
    return PhantomDataset(samples, name="synthetic")
