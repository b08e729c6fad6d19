"""
Affine mask synthesis and the traditional affine augmentation baseline

Forward map on pixel coordinates about the image centre: rotate
(counter-clockwise for positive angles), then scale, then translate, then
optionally mirror horizontally. Outputs are produced by inverse mapping; masks
use nearest-neighbour sampling and images bilinear, both with zero fill.
"""
import logging
from typing import List, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from ribforge.core.errors import ConfigError
from ribforge.core.rng import derive_seed, make_rng
from ribforge.schemas.configs import AffineRanges
from .types import AffineParams, MaskSet, Sample

logger = logging.getLogger(__name__)


def source_coordinates(params: AffineParams, height: int, width: int):
    """Source (row, col) float coordinates for every output pixel"""
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    rows, cols = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    dr = rows - cy
    dc = cols - cx
    if params.hflip:
        dc = -dc
    dc = dc - params.translate_frac[0] * width
    dr = dr - params.translate_frac[1] * height
    dr = dr / params.scale
    dc = dc / params.scale
    theta = np.deg2rad(params.rotation_deg)
    cos, sin = np.cos(theta), np.sin(theta)
    src_r = dr * cos + dc * sin
    src_c = -dr * sin + dc * cos
    return src_r + cy, src_c + cx


def warp_nearest(channels: np.ndarray, params: AffineParams) -> np.ndarray:
    """[C, H, W] -> [C, H, W]; nearest neighbour, zero fill"""
    if params.is_identity:
        return channels.copy()
    C, H, W = channels.shape
    src_r, src_c = source_coordinates(params, H, W)
    r = np.rint(src_r).astype(np.int64)
    c = np.rint(src_c).astype(np.int64)
    valid = (r >= 0) & (r < H) & (c >= 0) & (c < W)
    out = np.zeros_like(channels)
    out[:, valid] = channels[:, r[valid], c[valid]]
    return out


def warp_bilinear(channels: np.ndarray, params: AffineParams) -> np.ndarray:
    """[C, H, W] -> [C, H, W]; bilinear, zero fill"""
    if params.is_identity:
        return channels.copy()
    C, H, W = channels.shape
    src_r, src_c = source_coordinates(params, H, W)
    coords = np.stack([src_r, src_c])
    return np.stack([
        map_coordinates(ch.astype(np.float64), coords, order=1, mode="constant", cval=0.0)
        for ch in channels
    ]).astype(channels.dtype)


def affine_transform_maskset(masks: MaskSet, params: AffineParams) -> MaskSet:
    """Apply one shared map to every channel; results stay binary"""
    stacked = warp_nearest(masks.stack(), params)
    return MaskSet.from_stacked(stacked, masks.groups)


def affine_transform_sample(sample: Sample, params: AffineParams, seed: int = 0) -> Sample:
    """Deform image (bilinear) and masks (nearest) with the same map"""
    image = np.clip(warp_bilinear(sample.image, params), 0.0, 1.0)
    return Sample(
        image=image,
        masks=affine_transform_maskset(sample.masks, params),
        provenance="synthetic",
        seed=seed,
    )


def sample_affine_params(rng: np.random.Generator, ranges: AffineRanges) -> AffineParams:
    """Uniform draws in the configured ranges, in a fixed draw order"""
    rotation = float(rng.uniform(*ranges.rotation_deg))
    dx = float(rng.uniform(*ranges.translate_frac))
    dy = float(rng.uniform(*ranges.translate_frac))
    scale = float(rng.uniform(*ranges.scale))
    hflip = bool(rng.random() < ranges.hflip_prob)
    return AffineParams(rotation_deg=rotation, translate_frac=(dx, dy), scale=scale, hflip=hflip)


def round_robin_order(n_sources: int, n_out: int, seed: int) -> List[int]:
    """Source index for each output: a seeded permutation cycled until n_out"""
    if n_sources < 1:
        raise ConfigError("no source samples to draw from")
    perm = make_rng(seed, "round-robin").permutation(n_sources)
    return [int(perm[i % n_sources]) for i in range(n_out)]


def traditional_augment(samples: Sequence[Sample], n_out: int, seed: int, ranges: AffineRanges) -> List[Sample]:
    """Affine-only augmented copies of real samples"""
    if n_out < 1:
        raise ConfigError(f"n_out must be >= 1, got {n_out}")
    out = []
    for i, src in enumerate(round_robin_order(len(samples), n_out, seed)):
        params = sample_affine_params(make_rng(seed, "affine", i), ranges)
        augmented = affine_transform_sample(samples[src], params, seed=derive_seed(seed, "augmented", i))
        augmented.sample_id = f"augmented_{i:05d}"
        out.append(augmented)
    logger.info(f"Produced {len(out)} affine-augmented samples from {len(samples)} sources")
    return out
