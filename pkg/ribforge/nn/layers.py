"""
Parameterized layers built on the tensor kernels
"""
from typing import Optional

import numpy as np

from ribforge.tensor import Tensor, batchnorm2d, conv2d, conv_transpose2d, layernorm, matmul, pad2d
from .module import Module, Parameter

INIT_STD = 0.02


def _normal(rng: np.random.Generator, shape, std: float = INIT_STD) -> np.ndarray:
    return (std * rng.standard_normal(size=shape)).astype(np.float32)


class Conv2d(Module):
    """Cross-correlation layer; weights ~ normal(0, 0.02), bias zero"""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
        dilation: int = 1,
        bias: bool = True,
        padding_mode: str = "zeros",
    ):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.dilation = dilation
        self.padding_mode = padding_mode
        self.weight = Parameter(_normal(rng, (out_channels, in_channels, kernel_size, kernel_size)))
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        if self.padding_mode == "replicate" and self.padding:
            x = pad2d(x, self.padding, mode="replicate")
            return conv2d(x, self.weight, self.bias, self.stride, 0, self.dilation)
        return conv2d(x, self.weight, self.bias, self.stride, self.padding, self.dilation)


class ConvTranspose2d(Module):
    """Transposed convolution; weight layout [in, out, kh, kw]"""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
        bias: bool = True,
    ):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.weight = Parameter(_normal(rng, (in_channels, out_channels, kernel_size, kernel_size)))
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return conv_transpose2d(x, self.weight, self.bias, self.stride, self.padding)


class BatchNorm2d(Module):
    """Per-channel batch normalization with running statistics

    ``tracked`` counts train-mode updates; eval mode refuses to run while it
    is zero.
    """

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.scale = Parameter(np.ones(channels, dtype=np.float32))
        self.shift = Parameter(np.zeros(channels, dtype=np.float32))
        self.register_buffer("running_mean", np.zeros(channels, dtype=np.float32))
        self.register_buffer("running_var", np.ones(channels, dtype=np.float32))
        self.register_buffer("tracked", np.zeros(1, dtype=np.float32))

    def forward(self, x: Tensor) -> Tensor:
        if self.training:
            out = batchnorm2d(
                x, self.scale, self.shift, self.running_mean, self.running_var,
                training=True, momentum=self.momentum, eps=self.eps,
            )
            self.tracked += 1
            return out
        has_stats = self.tracked[0] > 0
        return batchnorm2d(
            x, self.scale, self.shift,
            self.running_mean if has_stats else None,
            self.running_var if has_stats else None,
            training=False, momentum=self.momentum, eps=self.eps,
        )


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.scale = Parameter(np.ones(dim, dtype=np.float32))
        self.shift = Parameter(np.zeros(dim, dtype=np.float32))

    def forward(self, x: Tensor) -> Tensor:
        return layernorm(x, self.scale, self.shift, self.eps)


class Linear(Module):
    """x [..., in] -> [..., out]"""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.weight = Parameter(_normal(rng, (in_features, out_features)))
        self.bias: Optional[Parameter] = Parameter(np.zeros(out_features, dtype=np.float32)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        out = matmul(x, self.weight)
        return out + self.bias if self.bias is not None else out
