"""
X-ray-like rendering of phantom masks
"""
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from ribforge.core.rng import make_rng
from ribforge.schemas.configs import PhantomConfig
from .types import MaskSet


def background(size: int, cfg: PhantomConfig) -> np.ndarray:
    """Vertical intensity ramp from background_top to background_bottom"""
    v = (np.arange(size, dtype=np.float64) + 0.5) / size
    ramp = cfg.background_top + (cfg.background_bottom - cfg.background_top) * v
    return np.repeat(ramp[:, None], size, axis=1)


def low_frequency_texture(size: int, cfg: PhantomConfig, seed: int) -> np.ndarray:
    """Smoothed white noise rescaled to unit standard deviation"""
    if cfg.texture_amplitude == 0:
        return np.zeros((size, size), dtype=np.float64)
    field = make_rng(seed, "texture").standard_normal((size, size))
    smooth = gaussian_filter(field, sigma=cfg.texture_scale * size / 64.0, mode="wrap")
    std = smooth.std()
    return smooth / std if std > 0 else smooth


def _blur(mask: np.ndarray, radius: float) -> np.ndarray:
    mask = mask.astype(np.float64)
    return gaussian_filter(mask, sigma=radius, mode="nearest") if radius > 0 else mask


def render_xray(masks: MaskSet, cfg: PhantomConfig, seed: int, texture_seed: Optional[int] = None) -> np.ndarray:
    """clamp01(background + sum_c w_c * blur(mask_c) + texture + noise) as float32 [1, H, W]

    Lungs darken, bones brighten. ``texture_seed`` overrides the texture
    sub-stream so images that differ only in noise can share texture.
    """
    size = masks.extent[0]
    image = background(size, cfg)
    weights = {"ribs": cfg.rib_weight, "lungs": cfg.lung_weight, "clavicles": cfg.clavicle_weight}
    for group, weight in weights.items():
        for channel in getattr(masks, group):
            image += weight * _blur(channel, cfg.blur_radius)
    image += cfg.texture_amplitude * low_frequency_texture(size, cfg, seed if texture_seed is None else texture_seed)
    if cfg.noise_sigma > 0:
        image += cfg.noise_sigma * make_rng(seed, "noise").standard_normal((size, size))
    return np.clip(image, 0.0, 1.0).astype(np.float32)[None]
