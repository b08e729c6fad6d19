"""
Procedural chest phantoms: lungs, clavicles and rib arcs with known masks
"""
import logging
from typing import Tuple

import numpy as np

from ribforge.core.errors import ConfigError
from ribforge.core.rng import make_rng
from ribforge.schemas.configs import PhantomConfig
from .render import render_xray
from .types import MaskSet, Sample

logger = logging.getLogger(__name__)

SIDES = (-1.0, 1.0)  # left, right of the vertical midline


def _grid(size: int, supersample: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Normalized (u, v) sample positions at pixel (or sub-pixel) centers"""
    n = size * supersample
    axis = (np.arange(n, dtype=np.float64) + 0.5) / n
    v, u = np.meshgrid(axis, axis, indexing="ij")
    return u, v


def _downsample_coverage(mask: np.ndarray, factor: int) -> np.ndarray:
    n = mask.shape[0] // factor
    return mask.reshape(n, factor, n, factor).mean(axis=(1, 3))


def ellipse_mask(size: int, cx: float, cy: float, ax: float, ay: float) -> np.ndarray:
    u, v = _grid(size)
    return (((u - cx) / ax) ** 2 + ((v - cy) / ay) ** 2 <= 1.0).astype(np.uint8)


def bar_mask(size: int, cx: float, cy: float, length: float, thickness: float, angle_deg: float) -> np.ndarray:
    """Filled rectangle centred at (cx, cy) whose long axis is rotated by ``angle_deg``"""
    u, v = _grid(size)
    theta = np.deg2rad(angle_deg)
    along = (u - cx) * np.cos(theta) - (v - cy) * np.sin(theta)
    across = (u - cx) * np.sin(theta) + (v - cy) * np.cos(theta)
    return ((np.abs(along) <= length / 2) & (np.abs(across) <= thickness / 2)).astype(np.uint8)


def rib_mask(
    size: int,
    side: float,
    y0: float,
    length: float,
    curvature: float,
    thickness: float,
    overlap: float,
    supersample: int,
) -> np.ndarray:
    """One rib arc: band of the parabola v = y0 + curvature * d^2, d = lateral distance from midline

    The band starts ``overlap`` past the midline, is rasterized at
    ``supersample`` x resolution and thresholded at 50% coverage.
    """
    u, v = _grid(size, supersample)
    d = side * (u - 0.5)
    centre = y0 + curvature * d * d
    half_width = 0.5 * thickness * np.sqrt(1.0 + (2.0 * curvature * d) ** 2)
    inside = (d >= -overlap) & (d <= length) & (np.abs(v - centre) <= half_width)
    coverage = _downsample_coverage(inside.astype(np.float64), supersample)
    return (coverage >= 0.5).astype(np.uint8)


def phantom_masks(seed: int, cfg: PhantomConfig) -> MaskSet:
    """Draw the anatomy of one phantom; a pure function of (seed, cfg)"""
    groups = cfg.groups
    if cfg.rib_pairs * 2 != groups.ribs:
        raise ConfigError(f"rib_pairs * 2 = {cfg.rib_pairs * 2} does not match {groups.ribs} rib channels")
    if groups.lungs != 2 or groups.clavicles != 2:
        raise ConfigError("phantoms have exactly two lung and two clavicle channels")
    rng = make_rng(seed, "phantom")
    size = cfg.image_size

    def draw(bounds):
        return float(rng.uniform(bounds[0], bounds[1]))

    lungs = []
    for side in SIDES:
        cx = 0.5 + side * draw(cfg.lung_offset_x)
        lungs.append(ellipse_mask(size, cx, draw(cfg.lung_center_y), draw(cfg.lung_semi_x), draw(cfg.lung_semi_y)))

    clavicles = []
    for side in SIDES:
        length = draw(cfg.clavicle_length)
        cx = 0.5 + side * (0.03 + length / 2)
        # lateral end rises
        angle = side * draw(cfg.clavicle_angle_deg)
        clavicles.append(bar_mask(size, cx, draw(cfg.clavicle_y), length, draw(cfg.clavicle_thickness), angle))

    ribs = []
    y0 = draw(cfg.rib_start_y)
    spacing = draw(cfg.rib_spacing)
    for k in range(cfg.rib_pairs):
        base = y0 + k * spacing
        for side in SIDES:
            ribs.append(rib_mask(
                size, side, base,
                length=draw(cfg.rib_length),
                curvature=draw(cfg.rib_curvature),
                thickness=draw(cfg.rib_thickness),
                overlap=cfg.rib_midline_overlap,
                supersample=cfg.supersample,
            ))
    return MaskSet(np.stack(ribs), np.stack(lungs), np.stack(clavicles))


def generate_phantom(seed: int, cfg: PhantomConfig) -> Sample:
    """Masks plus a rendered image, fully determined by ``seed``"""
    masks = phantom_masks(seed, cfg)
    image = render_xray(masks, cfg, seed)
    return Sample(image=image, masks=masks, provenance="real", seed=int(seed))
