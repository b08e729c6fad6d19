"""
Batch and layer normalization with fused analytic backward passes
"""
from typing import Optional

import numpy as np

from ribforge.core.errors import NormStateError, ShapeError, TensorError
from .tensor import Tensor, make_result


def batchnorm2d(
    x: Tensor,
    scale: Tensor,
    shift: Tensor,
    running_mean: Optional[np.ndarray],
    running_var: Optional[np.ndarray],
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Normalize [N,C,H,W] per channel

    Train mode uses batch statistics over (N, H, W) and updates the running
    buffers in place: running = (1 - momentum) * running + momentum * batch
    (unbiased variance). Eval mode reads the running buffers.
    """
    if x.ndim != 4:
        raise ShapeError(f"batchnorm2d expects [N,C,H,W], got {x.shape}")
    C = x.shape[1]
    if scale.shape != (C,) or shift.shape != (C,):
        raise ShapeError(f"batchnorm2d scale/shift must be ({C},), got {scale.shape}/{shift.shape}")
    axes = (0, 2, 3)
    s = scale.data.reshape(1, C, 1, 1)
    b = shift.data.reshape(1, C, 1, 1)

    if training:
        count = x.shape[0] * x.shape[2] * x.shape[3]
        mean = x.data.mean(axis=axes, keepdims=True)
        centered = x.data - mean
        var = (centered * centered).mean(axis=axes, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = centered * inv_std
        if running_mean is not None and running_var is not None:
            unbiased = var * (count / (count - 1)) if count > 1 else var
            running_mean *= 1.0 - momentum
            running_mean += momentum * mean.reshape(C)
            running_var *= 1.0 - momentum
            running_var += momentum * unbiased.reshape(C)

        def backward(g):
            gxhat = g * s
            gx = None
            if x.requires_grad:
                sum_g = gxhat.sum(axis=axes, keepdims=True)
                sum_gx = (gxhat * xhat).sum(axis=axes, keepdims=True)
                gx = (inv_std / count) * (count * gxhat - sum_g - xhat * sum_gx)
            gs = (g * xhat).sum(axis=axes) if scale.requires_grad else None
            gb = g.sum(axis=axes) if shift.requires_grad else None
            return gx, gs, gb
    else:
        if running_mean is None or running_var is None:
            raise NormStateError("batchnorm2d evaluated in eval mode before any running statistics exist")
        mean = running_mean.reshape(1, C, 1, 1)
        inv_std = 1.0 / np.sqrt(running_var.reshape(1, C, 1, 1) + eps)
        xhat = (x.data - mean) * inv_std

        def backward(g):
            gx = g * s * inv_std if x.requires_grad else None
            gs = (g * xhat).sum(axis=axes) if scale.requires_grad else None
            gb = g.sum(axis=axes) if shift.requires_grad else None
            return gx, gs, gb

    out = (xhat * s + b).astype(x.dtype, copy=False)
    return make_result(out, (x, scale, shift), backward, "batchnorm2d")


def layernorm(x: Tensor, scale: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the trailing (embedding) axis"""
    D = x.shape[-1]
    if scale.shape != (D,) or shift.shape != (D,):
        raise ShapeError(f"layernorm scale/shift must be ({D},), got {scale.shape}/{shift.shape}")
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    lead = tuple(range(x.ndim - 1))

    def backward(g):
        gxhat = g * scale.data
        gx = None
        if x.requires_grad:
            sum_g = gxhat.sum(axis=-1, keepdims=True)
            sum_gx = (gxhat * xhat).sum(axis=-1, keepdims=True)
            gx = (inv_std / D) * (D * gxhat - sum_g - xhat * sum_gx)
        gs = (g * xhat).sum(axis=lead) if scale.requires_grad else None
        gb = g.sum(axis=lead) if shift.requires_grad else None
        return gx, gs, gb

    out = (xhat * scale.data + shift.data).astype(x.dtype, copy=False)
    return make_result(out, (x, scale, shift), backward, "layernorm")


def norm(kind: str, x: Tensor, scale: Tensor, shift: Tensor, **kwargs) -> Tensor:
    """Dispatch by name: batchnorm2d | layernorm"""
    if kind == "batchnorm2d":
        return batchnorm2d(x, scale, shift, **kwargs)
    if kind == "layernorm":
        return layernorm(x, scale, shift, **kwargs)
    raise TensorError(f"unknown norm kind '{kind}'")
