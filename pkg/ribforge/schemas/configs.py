"""
Pydantic configuration documents for phantoms, networks and training stages
"""
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ribforge.nn.schedule import LrSchedule

GROUP_NAMES: Tuple[str, str, str] = ("ribs", "lungs", "clavicles")
CHANNEL_PREFIX = {"ribs": "rib", "lungs": "lung", "clavicles": "clav"}

Range = Tuple[float, float]


class StrictModel(BaseModel):
    """Base for every config document: unknown keys are rejected"""

    model_config = ConfigDict(extra="forbid")


def _ordered(value: Range, name: str) -> Range:
    if value[0] > value[1]:
        raise ValueError(f"{name}: min {value[0]} > max {value[1]}")
    return value


class ChannelGroups(StrictModel):
    """Channel counts per anatomical group, in fixed order ribs, lungs, clavicles"""

    ribs: int = Field(default=12, ge=1)
    lungs: int = Field(default=2, ge=1)
    clavicles: int = Field(default=2, ge=1)

    @property
    def total(self) -> int:
        return self.ribs + self.lungs + self.clavicles

    def counts(self) -> Dict[str, int]:
        return {name: getattr(self, name) for name in GROUP_NAMES}

    def slices(self) -> Dict[str, slice]:
        out, start = {}, 0
        for name in GROUP_NAMES:
            count = getattr(self, name)
            out[name] = slice(start, start + count)
            start += count
        return out

    def channel_names(self) -> List[str]:
        width = {"ribs": 2, "lungs": 1, "clavicles": 1}
        return [
            f"{CHANNEL_PREFIX[name]}_{i:0{width[name]}d}"
            for name in GROUP_NAMES
            for i in range(getattr(self, name))
        ]


# ---------------------------------------------------------------------------
# Phantom data
# ---------------------------------------------------------------------------
class PhantomConfig(StrictModel):
    """Geometry and rendering parameters of the procedural chest phantom

    Geometric quantities are fractions of the image extent.
    """

    image_size: int = Field(default=64, ge=16)
    rib_pairs: int = Field(default=6, ge=1)
    groups: ChannelGroups = Field(default_factory=ChannelGroups)

    # ribs
    rib_thickness: Range = (0.022, 0.032)
    rib_start_y: Range = (0.22, 0.26)
    rib_spacing: Range = (0.075, 0.085)
    rib_length: Range = (0.30, 0.36)
    rib_curvature: Range = (0.8, 1.3)
    rib_midline_overlap: float = Field(default=0.03, ge=0.0, le=0.2)

    # lungs
    lung_offset_x: Range = (0.17, 0.21)
    lung_center_y: Range = (0.50, 0.56)
    lung_semi_x: Range = (0.12, 0.15)
    lung_semi_y: Range = (0.26, 0.32)

    # clavicles
    clavicle_y: Range = (0.12, 0.16)
    clavicle_length: Range = (0.22, 0.28)
    clavicle_thickness: Range = (0.025, 0.035)
    clavicle_angle_deg: Range = (5.0, 15.0)

    # rendering
    background_top: float = Field(default=0.40, ge=0.0, le=1.0)
    background_bottom: float = Field(default=0.55, ge=0.0, le=1.0)
    lung_weight: float = -0.25
    rib_weight: float = Field(default=0.30, gt=0.0)
    clavicle_weight: float = Field(default=0.35, gt=0.0)
    texture_amplitude: float = Field(default=0.04, ge=0.0)
    texture_scale: float = Field(default=6.0, gt=0.0)
    noise_sigma: float = Field(default=0.02, ge=0.0)
    blur_radius: float = Field(default=0.8, ge=0.0)
    supersample: int = Field(default=4, ge=1, le=8)

    @field_validator("image_size")
    @classmethod
    def _divisible_by_16(cls, v: int) -> int:
        if v % 16:
            raise ValueError(f"image_size must be divisible by 16, got {v}")
        return v

    @model_validator(mode="after")
    def _check_ranges(self):
        for name, value in self:
            if isinstance(value, tuple) and len(value) == 2:
                _ordered(value, name)
        return self


class AffineRanges(StrictModel):
    """Uniform ranges for mask-synthesis affine parameters"""

    rotation_deg: Range = (-10.0, 10.0)
    translate_frac: Range = (-0.05, 0.05)
    scale: Range = (0.9, 1.1)
    hflip_prob: float = Field(default=0.5, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_ranges(self):
        _ordered(self.rotation_deg, "rotation_deg")
        _ordered(self.translate_frac, "translate_frac")
        _ordered(self.scale, "scale")
        if self.scale[0] <= 0:
            raise ValueError("scale range must be positive")
        return self

    @classmethod
    def identity(cls) -> "AffineRanges":
        return cls(rotation_deg=(0.0, 0.0), translate_frac=(0.0, 0.0), scale=(1.0, 1.0), hflip_prob=0.0)


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------
class GeneratorConfig(StrictModel):
    """Three organ encoders (bottleneck residual stages) and a shared decoder"""

    encoder_depth_per_stage: List[int] = Field(default_factory=lambda: [1, 1, 1, 1])
    base_channels: int = Field(default=8, ge=1)
    bottleneck_expansion: int = Field(default=2, ge=1)
    groups: ChannelGroups = Field(default_factory=ChannelGroups)
    output_activation: Literal["tanh"] = "tanh"

    @field_validator("encoder_depth_per_stage")
    @classmethod
    def _four_stages(cls, v: List[int]) -> List[int]:
        if len(v) != 4 or any(d < 1 for d in v):
            raise ValueError(f"encoder_depth_per_stage needs four positive block counts, got {v}")
        return v

    @property
    def feature_channels(self) -> int:
        return self.base_channels * 8 * self.bottleneck_expansion


class DiscriminatorConfig(StrictModel):
    """Unconditional PatchGAN"""

    n_layers: int = Field(default=2, ge=1)
    base_channels: int = Field(default=8, ge=1)
    in_channels: int = Field(default=1, ge=1)


class GuidanceUNetConfig(StrictModel):
    depth: int = Field(default=3, ge=1)
    base_channels: int = Field(default=8, ge=1)
    groups: ChannelGroups = Field(default_factory=ChannelGroups)

    @property
    def out_channels(self) -> int:
        return self.groups.total


class MTUNetConfig(StrictModel):
    """CNN stem, transformer bottleneck, ASPP, upsampling decoder, per-group heads"""

    cnn_stage_channels: List[int] = Field(default_factory=lambda: [8, 16, 32, 64])
    patch_embed_dim: int = Field(default=64, ge=4)
    n_transformer_layers: int = Field(default=2, ge=1)
    n_heads: int = Field(default=4, ge=1)
    mlp_ratio: int = Field(default=2, ge=1)
    aspp_dilations: List[int] = Field(default_factory=lambda: [1, 2, 4, 6])
    aspp_out_channels: int = Field(default=64, ge=1)
    decoder_channels: List[int] = Field(default_factory=lambda: [32, 16, 8, 8])
    head_channels: int = Field(default=8, ge=1)
    use_aspp: bool = True
    groups: ChannelGroups = Field(default_factory=ChannelGroups)

    @model_validator(mode="after")
    def _check_shapes(self):
        if len(self.cnn_stage_channels) != 4:
            raise ValueError("cnn_stage_channels needs four entries (H/2, H/4, H/8, H/16)")
        if len(self.decoder_channels) != 4:
            raise ValueError("decoder_channels needs four entries, one per 2x upsampling stage")
        if len(self.aspp_dilations) != 4 or self.aspp_dilations[0] != 1:
            raise ValueError("aspp_dilations needs four rates starting with 1")
        if self.patch_embed_dim % self.n_heads:
            raise ValueError(f"patch_embed_dim {self.patch_embed_dim} not divisible by n_heads {self.n_heads}")
        if self.patch_embed_dim % 4:
            raise ValueError("patch_embed_dim must be divisible by 4 for the 2-D sinusoidal encoding")
        return self

    @property
    def out_channels(self) -> int:
        return self.groups.total


# ---------------------------------------------------------------------------
# Training stages
# ---------------------------------------------------------------------------
class OptimizerConfig(StrictModel):
    kind: Literal["adam", "sgd"] = "adam"
    lr: float = Field(..., gt=0)
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = Field(default=1e-8, gt=0)
    momentum: float = Field(default=0.9, ge=0)
    weight_decay: float = Field(default=0.0, ge=0)


class StageConfig(StrictModel):
    """Everything one training stage needs; every random component keys off ``seed``"""

    stage: Literal["guidance", "sdgan", "mtunet"]
    preset: Literal["desk", "full"] = "desk"
    epochs: int = Field(..., ge=1)
    batch_size: int = Field(..., ge=1)
    optimizer: OptimizerConfig
    discriminator_optimizer: Optional[OptimizerConfig] = None
    schedule: LrSchedule
    seed: int = Field(default=0, ge=0)
    loss_weights: Dict[str, float] = Field(default_factory=lambda: {"gan": 1.0, "seg": 1.0})
    eval_every: int = Field(default=1, ge=1)
    max_steps: Optional[int] = Field(default=None, ge=1)
    threshold: float = Field(default=0.5, gt=0.0, le=1.0)
    phantom: PhantomConfig = Field(default_factory=PhantomConfig)
    affine: AffineRanges = Field(default_factory=AffineRanges)
    generator: Optional[GeneratorConfig] = None
    discriminator: Optional[DiscriminatorConfig] = None
    guidance: Optional[GuidanceUNetConfig] = None
    mtunet: Optional[MTUNetConfig] = None

    @model_validator(mode="after")
    def _check_stage_models(self):
        needed = {
            "guidance": ("guidance",),
            "sdgan": ("generator", "discriminator", "guidance", "discriminator_optimizer"),
            "mtunet": ("mtunet",),
        }[self.stage]
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"stage '{self.stage}' needs {', '.join(missing)}")
        if self.schedule.base_lr != self.optimizer.lr:
            raise ValueError(f"schedule.base_lr {self.schedule.base_lr} != optimizer.lr {self.optimizer.lr}")
        return self


class RunConfig(StrictModel):
    """Command-level JSON document: preset, seed, paths and overrides"""

    preset: Optional[Literal["desk", "full"]] = None
    seed: Optional[int] = Field(default=None, ge=0)
    paths: Dict[str, str] = Field(default_factory=dict)
    stage_overrides: Dict[str, Any] = Field(default_factory=dict)
    phantom_overrides: Dict[str, Any] = Field(default_factory=dict)


class AblationConfig(StrictModel):
    """Shared settings of the ablation harnesses"""

    multipliers: List[int] = Field(default_factory=lambda: [0, 1, 4])
    module_multiplier: int = Field(default=1, ge=1)
    synthesis_seed: int = Field(default=0, ge=0)

    @field_validator("multipliers")
    @classmethod
    def _non_empty(cls, v: List[int]) -> List[int]:
        if not v or any(m < 0 for m in v):
            raise ValueError("multipliers must be a non-empty list of non-negative integers")
        return v


class WorkflowConfig(StrictModel):
    """End-to-end run: dataset size plus the four stage configs"""

    preset: Literal["desk", "full"] = "desk"
    seed: int = Field(default=0, ge=0)
    n_samples: int = Field(default=40, ge=5)
    n_synthetic: int = Field(default=40, ge=1)
    guidance: StageConfig
    sdgan: StageConfig
    mtunet: StageConfig
