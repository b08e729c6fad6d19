"""
Convolutional building blocks shared by the networks
"""
import numpy as np

from ribforge.nn import BatchNorm2d, Conv2d, Module
from ribforge.tensor import Tensor, leaky_relu, relu, upsample_bilinear


class ConvBNAct(Module):
    """conv -> batchnorm -> activation ("relu", "leaky_relu" or "none")"""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = None,
        dilation: int = 1,
        act: str = "relu",
        padding_mode: str = "zeros",
    ):
        super().__init__()
        if padding is None:
            padding = dilation * (kernel_size // 2)
        self.act = act
        self.conv = Conv2d(
            in_channels, out_channels, kernel_size, rng,
            stride=stride, padding=padding, dilation=dilation, bias=False, padding_mode=padding_mode,
        )
        self.bn = BatchNorm2d(out_channels)

    def forward(self, x: Tensor) -> Tensor:
        out = self.bn(self.conv(x))
        if self.act == "relu":
            return relu(out)
        if self.act == "leaky_relu":
            return leaky_relu(out, 0.2)
        return out


class DoubleConv(Module):
    """Two 3x3 conv-BN-relu layers"""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator, stride: int = 1):
        super().__init__()
        self.first = ConvBNAct(in_channels, out_channels, 3, rng, stride=stride)
        self.second = ConvBNAct(out_channels, out_channels, 3, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.second(self.first(x))


class Bottleneck(Module):
    """1x1 reduce, 3x3 (strided), 1x1 expand, with a projection shortcut when shapes change"""

    def __init__(self, in_channels: int, width: int, expansion: int, rng: np.random.Generator, stride: int = 1):
        super().__init__()
        out_channels = width * expansion
        self.reduce = ConvBNAct(in_channels, width, 1, rng)
        self.spatial = ConvBNAct(width, width, 3, rng, stride=stride)
        self.expand = ConvBNAct(width, out_channels, 1, rng, act="none")
        self.shortcut = None
        if stride != 1 or in_channels != out_channels:
            self.shortcut = ConvBNAct(in_channels, out_channels, 1, rng, stride=stride, padding=0, act="none")

    def forward(self, x: Tensor) -> Tensor:
        identity = x if self.shortcut is None else self.shortcut(x)
        return relu(self.expand(self.spatial(self.reduce(x))) + identity)


class UpConv(Module):
    """2x bilinear upsample then conv-BN-relu"""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator):
        super().__init__()
        self.conv = ConvBNAct(in_channels, out_channels, 3, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(upsample_bilinear(x, x.shape[2] * 2, x.shape[3] * 2))
