"""
Reverse-mode automatic differentiation over numpy arrays
"""
from .tensor import Tape, Tensor, as_tensor, backward, create, is_grad_enabled, no_grad, ones_like, zeros_like
from .ops import (
    activation,
    add,
    cast,
    clip,
    concat,
    div,
    elementwise,
    exp,
    leaky_relu,
    log,
    matmul,
    mean,
    mul,
    neg,
    pad2d,
    permute,
    relu,
    reshape,
    shape_op,
    sigmoid,
    slice_,
    softmax,
    sub,
    sum_,
    tanh,
)
from .conv import conv2d, conv_output_extent, conv_transpose2d, global_avg_pool, pool2d, upsample_bilinear
from .norm import batchnorm2d, layernorm, norm
from .gradcheck import grad_check

__all__ = [
    "Tape",
    "Tensor",
    "as_tensor",
    "backward",
    "create",
    "is_grad_enabled",
    "no_grad",
    "ones_like",
    "zeros_like",
    "activation",
    "add",
    "cast",
    "clip",
    "concat",
    "div",
    "elementwise",
    "exp",
    "leaky_relu",
    "log",
    "matmul",
    "mean",
    "mul",
    "neg",
    "pad2d",
    "permute",
    "relu",
    "reshape",
    "shape_op",
    "sigmoid",
    "slice_",
    "softmax",
    "sub",
    "sum_",
    "tanh",
    "conv2d",
    "conv_output_extent",
    "conv_transpose2d",
    "global_avg_pool",
    "pool2d",
    "upsample_bilinear",
    "batchnorm2d",
    "layernorm",
    "norm",
    "grad_check",
]
