"""
Side-by-side visualization: image, colour-coded ribs, lungs and clavicles
"""
from pathlib import Path
from typing import Union

import numpy as np

from ribforge.core.errors import DatasetIOError
from .dataset_io import quantize_image
from .types import Sample

# One colour per rib channel, cycled when there are more than 24
PALETTE = np.array([
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
    (210, 245, 60), (250, 190, 212), (0, 128, 128), (220, 190, 255),
    (170, 110, 40), (255, 250, 200), (128, 0, 0), (170, 255, 195),
    (128, 128, 0), (255, 215, 180), (0, 0, 128), (128, 128, 128),
    (255, 99, 71), (64, 224, 208), (154, 205, 50), (186, 85, 211),
], dtype=np.float64)

OVERLAY_ALPHA = 0.5
GAP = 2


def overlay(gray: np.ndarray, channels: np.ndarray, offset: int = 0) -> np.ndarray:
    """Blend each binary channel's palette colour over a grey [H, W] uint8 image"""
    rgb = np.repeat(gray[..., None].astype(np.float64), 3, axis=-1)
    for k, channel in enumerate(channels):
        colour = PALETTE[(offset + k) % len(PALETTE)]
        on = channel.astype(bool)
        rgb[on] = (1.0 - OVERLAY_ALPHA) * rgb[on] + OVERLAY_ALPHA * colour
    return np.rint(rgb).astype(np.uint8)


def render_panel(sample: Sample) -> np.ndarray:
    """[H, 3W + 2*GAP, 3] uint8: image | ribs | lungs and clavicles"""
    gray = quantize_image(sample.image[0])
    H, W = gray.shape
    soft = np.concatenate([sample.masks.lungs, sample.masks.clavicles])
    tiles = [
        np.repeat(gray[..., None], 3, axis=-1),
        overlay(gray, sample.masks.ribs),
        overlay(gray, soft, offset=len(sample.masks.ribs)),
    ]
    spacer = np.zeros((H, GAP, 3), dtype=np.uint8)
    return np.concatenate([tiles[0], spacer, tiles[1], spacer, tiles[2]], axis=1)


def encode_ppm(rgb: np.ndarray) -> bytes:
    """uint8 [H, W, 3] -> binary PPM (P6)"""
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise DatasetIOError(f"PPM needs uint8 [H,W,3], got {rgb.dtype} {rgb.shape}")
    H, W = rgb.shape[:2]
    return f"P6\n{W} {H}\n255\n".encode("ascii") + np.ascontiguousarray(rgb).tobytes()


def write_panel(sample: Sample, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_ppm(render_panel(sample)))
    except OSError as e:
        raise DatasetIOError(f"cannot write panel {path}: {e}") from e
    return path
