"""
Stage presets

``full`` carries the large-scale hyperparameters (448x448 inputs, ResNet50 depths,
Adam 1e-4/200 epochs/batch 8 for guidance, Adam 2e-4/batch 2/100+100 for the
GAN, SGD 0.01/0.9/1e-4/batch 8 for MTUNet). ``desk`` shrinks widths, depths,
image size and epochs so every stage runs on a CPU in minutes.
"""
import logging
from typing import Any, Dict, Optional

from ribforge.core.errors import ConfigError
from ribforge.nn.schedule import LrSchedule
from ribforge.schemas.configs import (
    ChannelGroups,
    DiscriminatorConfig,
    GeneratorConfig,
    GuidanceUNetConfig,
    MTUNetConfig,
    OptimizerConfig,
    PhantomConfig,
    StageConfig,
    WorkflowConfig,
)
from ribforge.utils.helpers import deep_merge

logger = logging.getLogger(__name__)

PRESETS = ("desk", "full")
STAGES = ("guidance", "sdgan", "mtunet")


def _desk_groups() -> ChannelGroups:
    return ChannelGroups(ribs=12, lungs=2, clavicles=2)


def _full_groups() -> ChannelGroups:
    return ChannelGroups(ribs=24, lungs=2, clavicles=2)


def desk_phantom() -> PhantomConfig:
    return PhantomConfig(image_size=64, rib_pairs=6, groups=_desk_groups())


def full_phantom() -> PhantomConfig:
    return PhantomConfig(
        image_size=448,
        rib_pairs=12,
        groups=_full_groups(),
        rib_start_y=(0.20, 0.22),
        rib_spacing=(0.044, 0.048),
        rib_thickness=(0.012, 0.016),
    )


def desk_stage_config(stage: str) -> StageConfig:
    groups = _desk_groups()
    phantom = desk_phantom()
    if stage == "guidance":
        return StageConfig(
            stage="guidance", preset="desk", epochs=30, batch_size=4,
            optimizer=OptimizerConfig(kind="adam", lr=1e-3),
            schedule=LrSchedule(kind="linear_to_zero", base_lr=1e-3, total_epochs=30),
            phantom=phantom,
            guidance=GuidanceUNetConfig(depth=3, base_channels=8, groups=groups),
        )
    if stage == "sdgan":
        return StageConfig(
            stage="sdgan", preset="desk", epochs=30, batch_size=2,
            optimizer=OptimizerConfig(kind="adam", lr=2e-4),
            discriminator_optimizer=OptimizerConfig(kind="adam", lr=2e-4),
            schedule=LrSchedule(kind="constant_then_linear", base_lr=2e-4, n_const=15, n_decay=15),
            phantom=phantom,
            generator=GeneratorConfig(encoder_depth_per_stage=[1, 1, 1, 1], base_channels=8, bottleneck_expansion=2, groups=groups),
            discriminator=DiscriminatorConfig(n_layers=2, base_channels=8),
            guidance=GuidanceUNetConfig(depth=3, base_channels=8, groups=groups),
        )
    if stage == "mtunet":
        return StageConfig(
            stage="mtunet", preset="desk", epochs=30, batch_size=4,
            optimizer=OptimizerConfig(kind="sgd", lr=0.01, momentum=0.9, weight_decay=1e-4),
            schedule=LrSchedule(kind="constant", base_lr=0.01),
            phantom=phantom,
            mtunet=MTUNetConfig(groups=groups),
        )
    raise ConfigError(f"unknown stage '{stage}', expected one of {STAGES}")


def full_stage_config(stage: str) -> StageConfig:
    groups = _full_groups()
    phantom = full_phantom()
    if stage == "guidance":
        return StageConfig(
            stage="guidance", preset="full", epochs=200, batch_size=8,
            optimizer=OptimizerConfig(kind="adam", lr=1e-4),
            schedule=LrSchedule(kind="linear_to_zero", base_lr=1e-4, total_epochs=200),
            phantom=phantom,
            guidance=GuidanceUNetConfig(depth=4, base_channels=64, groups=groups),
        )
    if stage == "sdgan":
        return StageConfig(
            stage="sdgan", preset="full", epochs=200, batch_size=2,
            optimizer=OptimizerConfig(kind="adam", lr=2e-4),
            discriminator_optimizer=OptimizerConfig(kind="adam", lr=2e-4),
            schedule=LrSchedule(kind="constant_then_linear", base_lr=2e-4, n_const=100, n_decay=100),
            phantom=phantom,
            generator=GeneratorConfig(encoder_depth_per_stage=[3, 4, 6, 3], base_channels=64, bottleneck_expansion=4, groups=groups),
            discriminator=DiscriminatorConfig(n_layers=3, base_channels=64),
            guidance=GuidanceUNetConfig(depth=4, base_channels=64, groups=groups),
        )
    if stage == "mtunet":
        return StageConfig(
            stage="mtunet", preset="full", epochs=200, batch_size=8,
            optimizer=OptimizerConfig(kind="sgd", lr=0.01, momentum=0.9, weight_decay=1e-4),
            schedule=LrSchedule(kind="constant", base_lr=0.01),
            phantom=phantom,
            mtunet=MTUNetConfig(
                cnn_stage_channels=[64, 256, 512, 1024],
                patch_embed_dim=768,
                n_transformer_layers=12,
                n_heads=12,
                mlp_ratio=4,
                aspp_dilations=[1, 6, 12, 18],
                aspp_out_channels=256,
                decoder_channels=[256, 128, 64, 16],
                head_channels=16,
                groups=groups,
            ),
        )
    raise ConfigError(f"unknown stage '{stage}', expected one of {STAGES}")


def get_preset(preset: str, stage: str) -> StageConfig:
    if preset == "desk":
        return desk_stage_config(stage)
    if preset == "full":
        return full_stage_config(stage)
    raise ConfigError(f"unknown preset '{preset}', expected one of {PRESETS}")


def get_phantom_preset(preset: str) -> PhantomConfig:
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset '{preset}', expected one of {PRESETS}")
    return desk_phantom() if preset == "desk" else full_phantom()


def resolve_stage_config(
    stage: str,
    preset: str = "desk",
    overrides: Optional[Dict[str, Any]] = None,
    seed: Optional[int] = None,
) -> StageConfig:
    """Preset, deep-merged overrides, then re-validation

    An override of ``optimizer.lr`` without ``schedule.base_lr`` carries the
    new rate into the schedule.
    """
    base = get_preset(preset, stage).model_dump(mode="json")
    overrides = dict(overrides or {})
    if seed is not None:
        overrides["seed"] = seed
    lr = overrides.get("optimizer", {}).get("lr")
    if lr is not None and "base_lr" not in overrides.get("schedule", {}):
        overrides = deep_merge(overrides, {"schedule": {"base_lr": lr}})
    merged = deep_merge(base, overrides)
    merged["stage"] = stage
    cfg = StageConfig.model_validate(merged)
    logger.debug(f"Resolved {preset} {stage} config (seed {cfg.seed})")
    return cfg


def resolve_phantom_config(preset: str = "desk", overrides: Optional[Dict[str, Any]] = None) -> PhantomConfig:
    base = get_phantom_preset(preset).model_dump(mode="json")
    return PhantomConfig.model_validate(deep_merge(base, overrides or {}))


def workflow_config(preset: str = "desk", seed: int = 0, overrides: Optional[Dict[str, Any]] = None) -> WorkflowConfig:
    overrides = dict(overrides or {})
    stages = {
        stage: resolve_stage_config(stage, preset, overrides.pop(stage, None), seed=seed).model_dump(mode="json")
        for stage in STAGES
    }
    return WorkflowConfig.model_validate({"preset": preset, "seed": seed, **stages, **overrides})
