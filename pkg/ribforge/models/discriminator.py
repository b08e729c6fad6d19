"""
PatchGAN discriminator
"""
import numpy as np

from ribforge.core.errors import ShapeError
from ribforge.nn import Conv2d, Module, Sequential
from ribforge.schemas.configs import DiscriminatorConfig
from ribforge.tensor import Tensor, as_tensor, conv_output_extent, leaky_relu
from .blocks import ConvBNAct

KERNEL = 4
MAX_WIDTH_FACTOR = 8


class _LeakyStem(Module):
    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator):
        super().__init__()
        self.conv = Conv2d(in_channels, out_channels, KERNEL, rng, stride=2, padding=1)

    def forward(self, x: Tensor) -> Tensor:
        return leaky_relu(self.conv(x), 0.2)


class PatchDiscriminator(Module):
    """Image [N,1,H,W] -> patch logits [N,1,h,w]

    n_layers stride-2 convolutions (the first without normalization), one
    stride-1 conv-BN-lrelu, and a stride-1 projection to a single logit map.
    All kernels are 4x4 with padding 1.
    """

    def __init__(self, cfg: DiscriminatorConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        base = cfg.base_channels
        self.layers = Sequential([_LeakyStem(cfg.in_channels, base, rng)])
        factor = 1
        for i in range(1, cfg.n_layers):
            prev, factor = factor, min(2 ** i, MAX_WIDTH_FACTOR)
            self.layers.append(ConvBNAct(base * prev, base * factor, KERNEL, rng, stride=2, padding=1, act="leaky_relu"))
        prev, factor = factor, min(2 ** cfg.n_layers, MAX_WIDTH_FACTOR)
        self.layers.append(ConvBNAct(base * prev, base * factor, KERNEL, rng, stride=1, padding=1, act="leaky_relu"))
        self.layers.append(Conv2d(base * factor, 1, KERNEL, rng, stride=1, padding=1))

    def output_extent(self, size: int) -> int:
        for _ in range(self.cfg.n_layers):
            size = conv_output_extent(size, KERNEL, 2, 1)
        for _ in range(2):
            size = conv_output_extent(size, KERNEL, 1, 1)
        return size

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        if x.ndim != 4 or x.shape[1] != self.cfg.in_channels:
            raise ShapeError(f"discriminator expects [N,{self.cfg.in_channels},H,W], got {x.shape}")
        if min(self.output_extent(x.shape[2]), self.output_extent(x.shape[3])) < 1:
            raise ShapeError(f"input {x.shape[2]}x{x.shape[3]} too small for {self.cfg.n_layers} strided layers")
        return self.layers(x)


def discriminator_forward(discriminator: PatchDiscriminator, x) -> Tensor:
    return discriminator(x)
