"""
Segmentation and adversarial losses
"""
from typing import Tuple, Union

import numpy as np

from ribforge.core.errors import ShapeError
from ribforge.tensor import Tensor, clip, log, sigmoid

BCE_EPS = 1e-7

Target = Union[Tensor, np.ndarray]


def _target(target: Target, like: Tensor) -> Tensor:
    data = target.data if isinstance(target, Tensor) else np.asarray(target)
    if data.shape != like.shape:
        raise ShapeError(f"prediction {like.shape} and target {data.shape} differ")
    return Tensor(data.astype(like.dtype, copy=False))


def bce_loss(pred: Tensor, target: Target, eps: float = BCE_EPS) -> Tensor:
    """Mean binary cross-entropy on probabilities clamped to [eps, 1 - eps]"""
    t = _target(target, pred)
    p = clip(pred, eps, 1.0 - eps)
    per_element = t * log(p) + (1.0 - t) * log(1.0 - p)
    return -per_element.mean()


def dice_loss(pred: Tensor, target: Target, smooth: float = 1.0) -> Tensor:
    """1 - mean over (batch, channel) of (2 sum(p t) + s) / (sum p + sum t + s)

    Rank >= 3 inputs are read as [N, C, ...] and reduced per channel over the
    trailing axes; lower-rank inputs count as a single channel.
    """
    t = _target(target, pred)
    axes = tuple(range(2, pred.ndim)) if pred.ndim >= 3 else None
    inter = (pred * t).sum(axis=axes)
    denom = pred.sum(axis=axes) + t.sum(axis=axes)
    score = (2.0 * inter + smooth) / (denom + smooth)
    return 1.0 - score.mean()


def seg_loss(pred: Tensor, target: Target) -> Tensor:
    """BCE + Dice with unit weights"""
    return bce_loss(pred, target) + dice_loss(pred, target)


def discriminator_loss(d_real_logits: Tensor, d_fake_logits: Tensor) -> Tensor:
    """0.5 * [BCE(sigma(real), 1) + BCE(sigma(fake), 0)]; pass detached fake logits"""
    if d_real_logits.shape != d_fake_logits.shape:
        raise ShapeError(f"real {d_real_logits.shape} and fake {d_fake_logits.shape} patch maps differ")
    real = bce_loss(sigmoid(d_real_logits), np.ones(d_real_logits.shape, dtype=d_real_logits.dtype))
    fake = bce_loss(sigmoid(d_fake_logits), np.zeros(d_fake_logits.shape, dtype=d_fake_logits.dtype))
    return 0.5 * (real + fake)


def generator_loss(d_fake_logits: Tensor) -> Tensor:
    """Non-saturating generator objective BCE(sigma(fake), 1)"""
    return bce_loss(sigmoid(d_fake_logits), np.ones(d_fake_logits.shape, dtype=d_fake_logits.dtype))


def gan_losses(d_real_logits: Tensor, d_fake_logits: Tensor) -> Tuple[Tensor, Tensor]:
    """(d_loss, g_loss) over patch logit maps; d_loss sees the fake map detached"""
    d_loss = discriminator_loss(d_real_logits, d_fake_logits.detach())
    g_loss = generator_loss(d_fake_logits)
    return d_loss, g_loss
