"""
Mask-to-image generator: three disentangled organ encoders and a shared decoder
"""
import logging
from typing import Dict, Union

import numpy as np

from ribforge.core.errors import ShapeError
from ribforge.nn import Conv2d, Module, ModuleList, Sequential
from ribforge.schemas.configs import GROUP_NAMES, GeneratorConfig
from ribforge.tensor import Tensor, as_tensor, concat, tanh
from .blocks import Bottleneck, ConvBNAct, UpConv

logger = logging.getLogger(__name__)

DOWNSAMPLE = 16


class OrganEncoder(Module):
    """Residual bottleneck encoder: stride-1 stem then four stride-2 stages"""

    def __init__(self, in_channels: int, cfg: GeneratorConfig, rng: np.random.Generator):
        super().__init__()
        base, expansion = cfg.base_channels, cfg.bottleneck_expansion
        self.in_channels = in_channels
        self.stem = ConvBNAct(in_channels, base, 3, rng)
        self.stages = ModuleList()
        channels = base
        for i, depth in enumerate(cfg.encoder_depth_per_stage):
            width = base * 2 ** i
            blocks = Sequential()
            for j in range(depth):
                blocks.append(Bottleneck(channels, width, expansion, rng, stride=2 if j == 0 else 1))
                channels = width * expansion
            self.stages.append(blocks)
        self.out_channels = channels

    def forward(self, x: Tensor) -> Tensor:
        out = self.stem(x)
        for stage in self.stages:
            out = stage(out)
        return out


class FeatureDecoder(Module):
    """Four (2x upsample, conv, BN, relu) blocks then conv + tanh to one channel"""

    def __init__(self, in_channels: int, base_channels: int, rng: np.random.Generator):
        super().__init__()
        self.blocks = Sequential()
        channels = in_channels
        for i in (3, 2, 1, 0):
            self.blocks.append(UpConv(channels, base_channels * 2 ** i, rng))
            channels = base_channels * 2 ** i
        self.head = Conv2d(channels, 1, 3, rng, padding=1)

    def forward(self, x: Tensor) -> Tensor:
        return tanh(self.head(self.blocks(x)))


class Generator(Module):
    """x_g = D(cat(E_ribs(p_ribs), E_lungs(p_lungs), E_clavicles(p_clavicles)))"""

    def __init__(self, cfg: GeneratorConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        counts = cfg.groups.counts()
        self.ribs_encoder = OrganEncoder(counts["ribs"], cfg, rng)
        self.lungs_encoder = OrganEncoder(counts["lungs"], cfg, rng)
        self.clavicles_encoder = OrganEncoder(counts["clavicles"], cfg, rng)
        self.decoder = FeatureDecoder(3 * cfg.feature_channels, cfg.base_channels, rng)

    def encoder(self, encoder_id: str) -> OrganEncoder:
        if encoder_id not in GROUP_NAMES:
            raise ShapeError(f"unknown encoder '{encoder_id}', expected one of {GROUP_NAMES}")
        return getattr(self, f"{encoder_id}_encoder")

    def encode(self, encoder_id: str, mask_group: Union[Tensor, np.ndarray]) -> Tensor:
        """Feature map [N, F, H/16, W/16] of one organ group"""
        encoder = self.encoder(encoder_id)
        x = as_tensor(mask_group, dtype=np.float32)
        if x.ndim != 4:
            raise ShapeError(f"{encoder_id} masks must be [N,C,H,W], got {x.shape}")
        if x.shape[1] != encoder.in_channels:
            raise ShapeError(f"{encoder_id} encoder expects {encoder.in_channels} channels, got {x.shape[1]}")
        if x.shape[2] % DOWNSAMPLE or x.shape[3] % DOWNSAMPLE:
            raise ShapeError(f"mask extent {x.shape[2]}x{x.shape[3]} not divisible by {DOWNSAMPLE}")
        return encoder(x)

    def forward_groups(self, groups: Dict[str, Union[Tensor, np.ndarray]]) -> Tensor:
        shapes = {}
        for name in GROUP_NAMES:
            shape = tuple(np.shape(groups[name]))
            shapes[name] = shape[:1] + shape[2:]
        if len(set(shapes.values())) != 1:
            raise ShapeError(f"mask groups disagree on N, H, W: {shapes}")
        features = [self.encode(name, groups[name]) for name in GROUP_NAMES]
        return self.decoder(concat(features, axis=1))

    def forward(self, masks: Union[Tensor, np.ndarray]) -> Tensor:
        """Stacked masks [N, Cr+Cl+Cc, H, W] -> image [N, 1, H, W] in (-1, 1)"""
        data = masks.data if isinstance(masks, Tensor) else np.asarray(masks)
        if data.ndim != 4 or data.shape[1] != self.cfg.groups.total:
            raise ShapeError(f"generator expects [N,{self.cfg.groups.total},H,W] masks, got {data.shape}")
        slices = self.cfg.groups.slices()
        return self.forward_groups({name: data[:, slices[name]] for name in GROUP_NAMES})


def organ_encoder_forward(generator: Generator, encoder_id: str, mask_group) -> Tensor:
    return generator.encode(encoder_id, mask_group)


def generator_forward(generator: Generator, masks) -> Tensor:
    return generator(masks)
