"""
Semantics-guidance UNet: multi-label segmenter scoring generated images
"""
import numpy as np

from ribforge.core.errors import ShapeError
from ribforge.nn import Conv2d, ConvTranspose2d, Module, ModuleList
from ribforge.schemas.configs import GuidanceUNetConfig
from ribforge.tensor import Tensor, as_tensor, concat, pool2d, sigmoid
from .blocks import DoubleConv


class GuidanceUNet(Module):
    """Image [N,1,H,W] in [-1,1] -> per-channel probabilities [N, Cr+Cl+Cc, H, W]"""

    def __init__(self, cfg: GuidanceUNetConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        base = cfg.base_channels
        widths = [base * 2 ** i for i in range(cfg.depth + 1)]
        self.down = ModuleList()
        channels = 1
        for w in widths[:-1]:
            self.down.append(DoubleConv(channels, w, rng))
            channels = w
        self.bottom = DoubleConv(channels, widths[-1], rng)
        self.up = ModuleList()
        self.merge = ModuleList()
        for i in reversed(range(cfg.depth)):
            self.up.append(ConvTranspose2d(widths[i + 1], widths[i], 2, rng, stride=2))
            self.merge.append(DoubleConv(2 * widths[i], widths[i], rng))
        self.head = Conv2d(widths[0], cfg.out_channels, 1, rng)

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        factor = 2 ** self.cfg.depth
        if x.ndim != 4 or x.shape[1] != 1:
            raise ShapeError(f"guidance UNet expects [N,1,H,W], got {x.shape}")
        if x.shape[2] % factor or x.shape[3] % factor:
            raise ShapeError(f"input extent {x.shape[2]}x{x.shape[3]} not divisible by {factor}")
        skips = []
        out = x
        for block in self.down:
            out = block(out)
            skips.append(out)
            out = pool2d("max", out, 2)
        out = self.bottom(out)
        for up, merge, skip in zip(self.up, self.merge, reversed(skips)):
            out = merge(concat([up(out), skip], axis=1))
        return sigmoid(self.head(out))


def guidance_forward(guidance: GuidanceUNet, x) -> Tensor:
    return guidance(x)
