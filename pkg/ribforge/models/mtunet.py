"""
MTUNet: hybrid CNN-transformer encoder, ASPP, upsampling decoder and
parallel sigmoid heads (one per anatomical group)
"""
import logging
import math
from typing import List, Optional

import numpy as np

from ribforge.core.errors import ShapeError
from ribforge.nn import Conv2d, LayerNorm, Linear, Module, ModuleList
from ribforge.schemas.configs import GROUP_NAMES, MTUNetConfig
from ribforge.tensor import (
    Tensor,
    as_tensor,
    concat,
    global_avg_pool,
    matmul,
    relu,
    sigmoid,
    softmax,
    upsample_bilinear,
)
from .blocks import ConvBNAct, DoubleConv

logger = logging.getLogger(__name__)

DOWNSAMPLE = 16


def sinusoidal_position_encoding(height: int, width: int, dim: int) -> np.ndarray:
    """Fixed 2-D encoding [height*width, dim]: first half encodes rows, second half columns"""
    half = dim // 2
    freqs = 1.0 / (10000.0 ** (np.arange(0, half, 2, dtype=np.float64) / half))

    def encode(positions: np.ndarray) -> np.ndarray:
        angles = positions[:, None] * freqs[None, :]
        out = np.zeros((positions.size, half), dtype=np.float64)
        out[:, 0::2] = np.sin(angles)
        out[:, 1::2] = np.cos(angles)
        return out

    rows = encode(np.arange(height, dtype=np.float64))
    cols = encode(np.arange(width, dtype=np.float64))
    grid = np.concatenate(
        [np.repeat(rows, width, axis=0), np.tile(cols, (height, 1))],
        axis=1,
    )
    return grid.astype(np.float32)


class ASPP(Module):
    """Atrous spatial pyramid pooling

    Branches: 1x1 conv, three 3x3 dilated convs (replicate padding), and
    global-average-pool -> 1x1 conv -> bilinear restore. The five maps are
    concatenated and fused by a 1x1 conv; spatial extent is preserved.
    """

    def __init__(self, in_channels: int, out_channels: int, dilations: List[int], rng: np.random.Generator):
        super().__init__()
        self.branch_channels = out_channels
        self.point = ConvBNAct(in_channels, out_channels, 1, rng)
        self.atrous = ModuleList([
            ConvBNAct(in_channels, out_channels, 3, rng, dilation=d, padding_mode="replicate")
            for d in dilations[1:]
        ])
        self.pool_proj = Conv2d(in_channels, out_channels, 1, rng)
        self.fuse = ConvBNAct(5 * out_channels, out_channels, 1, rng)
        self.last_concat_channels: Optional[int] = None

    def forward(self, x: Tensor) -> Tensor:
        h, w = x.shape[2], x.shape[3]
        branches = [self.point(x)] + [branch(x) for branch in self.atrous]
        pooled = relu(self.pool_proj(global_avg_pool(x)))
        branches.append(upsample_bilinear(pooled, h, w))
        merged = concat(branches, axis=1)
        self.last_concat_channels = merged.shape[1]
        return self.fuse(merged)


class SelfAttention(Module):
    """Multi-head self-attention over [N, L, E] tokens"""

    def __init__(self, dim: int, n_heads: int, rng: np.random.Generator):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.qkv = Linear(dim, 3 * dim, rng)
        self.proj = Linear(dim, dim, rng)
        self.last_attention: Optional[np.ndarray] = None

    def forward(self, x: Tensor) -> Tensor:
        N, L, E = x.shape
        qkv = self.qkv(x).reshape(N, L, 3, self.n_heads, self.head_dim).permute(2, 0, 3, 1, 4)
        q, k, v = qkv[0], qkv[1], qkv[2]
        scores = matmul(q, k.permute(0, 1, 3, 2)) * (1.0 / math.sqrt(self.head_dim))
        probs = softmax(scores, axis=-1)
        self.last_attention = probs.data
        out = matmul(probs, v).permute(0, 2, 1, 3).reshape(N, L, E)
        return self.proj(out)


class TransformerLayer(Module):
    """Pre-norm block: x + MHSA(LN(x)), then x + MLP(LN(x))"""

    def __init__(self, dim: int, n_heads: int, mlp_ratio: int, rng: np.random.Generator):
        super().__init__()
        self.norm1 = LayerNorm(dim)
        self.attn = SelfAttention(dim, n_heads, rng)
        self.norm2 = LayerNorm(dim)
        self.fc1 = Linear(dim, dim * mlp_ratio, rng)
        self.fc2 = Linear(dim * mlp_ratio, dim, rng)

    def forward(self, x: Tensor) -> Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.fc2(relu(self.fc1(self.norm2(x))))


class DecoderStage(Module):
    """2x bilinear upsample, optional skip concat, two conv-BN-relu"""

    def __init__(self, in_channels: int, skip_channels: int, out_channels: int, rng: np.random.Generator):
        super().__init__()
        self.block = DoubleConv(in_channels + skip_channels, out_channels, rng)

    def forward(self, x: Tensor, skip: Optional[Tensor] = None) -> Tensor:
        x = upsample_bilinear(x, x.shape[2] * 2, x.shape[3] * 2)
        if skip is not None:
            x = concat([x, skip], axis=1)
        return self.block(x)


class SegmentationHead(Module):
    def __init__(self, in_channels: int, hidden: int, out_channels: int, rng: np.random.Generator):
        super().__init__()
        self.conv = ConvBNAct(in_channels, hidden, 3, rng)
        self.out = Conv2d(hidden, out_channels, 1, rng)

    def forward(self, x: Tensor) -> Tensor:
        return sigmoid(self.out(self.conv(x)))


class MTUNet(Module):
    """Image [N,1,H,W] in [-1,1] -> probabilities [N, Cr+Cl+Cc, H, W]"""

    def __init__(self, cfg: MTUNetConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        c = cfg.cnn_stage_channels
        E = cfg.patch_embed_dim
        self.stages = ModuleList()
        channels = 1
        for width in c:
            self.stages.append(DoubleConv(channels, width, rng, stride=2))
            channels = width
        self.patch_embed = Conv2d(c[3], E, 1, rng)
        self.transformer = ModuleList([
            TransformerLayer(E, cfg.n_heads, cfg.mlp_ratio, rng) for _ in range(cfg.n_transformer_layers)
        ])
        self.encoder_norm = LayerNorm(E)
        self.reshape_conv = ConvBNAct(E, c[3], 3, rng)
        if cfg.use_aspp:
            self.aspp = ASPP(c[3], cfg.aspp_out_channels, cfg.aspp_dilations, rng)
            channels = cfg.aspp_out_channels
        else:
            self.aspp = None
            channels = c[3]
        skip_widths = [c[2], c[1], c[0], 0]
        self.decoder = ModuleList()
        for skip, width in zip(skip_widths, cfg.decoder_channels):
            self.decoder.append(DecoderStage(channels, skip, width, rng))
            channels = width
        counts = cfg.groups.counts()
        self.heads = ModuleList([
            SegmentationHead(channels, cfg.head_channels, counts[name], rng) for name in GROUP_NAMES
        ])
        self._pos_cache = {}

    def position_encoding(self, h: int, w: int) -> np.ndarray:
        if (h, w) not in self._pos_cache:
            self._pos_cache[(h, w)] = sinusoidal_position_encoding(h, w, self.cfg.patch_embed_dim)
        return self._pos_cache[(h, w)]

    @property
    def attention_maps(self) -> List[np.ndarray]:
        return [layer.attn.last_attention for layer in self.transformer]

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        if x.ndim != 4 or x.shape[1] != 1:
            raise ShapeError(f"MTUNet expects [N,1,H,W], got {x.shape}")
        if x.shape[2] % DOWNSAMPLE or x.shape[3] % DOWNSAMPLE:
            raise ShapeError(f"input extent {x.shape[2]}x{x.shape[3]} not divisible by {DOWNSAMPLE}")
        skips = []
        out = x
        for stage in self.stages:
            out = stage(out)
            skips.append(out)
        deep = skips.pop()

        N, _, h, w = deep.shape
        E = self.cfg.patch_embed_dim
        tokens = self.patch_embed(deep).reshape(N, E, h * w).permute(0, 2, 1)
        tokens = tokens + Tensor(self.position_encoding(h, w))
        for layer in self.transformer:
            tokens = layer(tokens)
        tokens = self.encoder_norm(tokens)
        out = self.reshape_conv(tokens.permute(0, 2, 1).reshape(N, E, h, w))
        if self.aspp is not None:
            out = self.aspp(out)

        for stage, skip in zip(self.decoder, [skips[2], skips[1], skips[0], None]):
            out = stage(out, skip)
        return concat([head(out) for head in self.heads], axis=1)


def aspp_forward(aspp: ASPP, feat) -> Tensor:
    return aspp(as_tensor(feat))


def mtunet_forward(model: MTUNet, x) -> Tensor:
    return model(x)
