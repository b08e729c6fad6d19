"""
Configuration and report schemas
"""
from .configs import (
    CHANNEL_PREFIX,
    GROUP_NAMES,
    AblationConfig,
    AffineRanges,
    ChannelGroups,
    DiscriminatorConfig,
    GeneratorConfig,
    GuidanceUNetConfig,
    MTUNetConfig,
    OptimizerConfig,
    PhantomConfig,
    RunConfig,
    StageConfig,
    WorkflowConfig,
)
from .reports import AblationRow, ChannelScore, EvalTable, GradCheckResult, GroupScore, TrainReport

__all__ = [
    "CHANNEL_PREFIX",
    "GROUP_NAMES",
    "AblationConfig",
    "AffineRanges",
    "ChannelGroups",
    "DiscriminatorConfig",
    "GeneratorConfig",
    "GuidanceUNetConfig",
    "MTUNetConfig",
    "OptimizerConfig",
    "PhantomConfig",
    "RunConfig",
    "StageConfig",
    "WorkflowConfig",
    "AblationRow",
    "ChannelScore",
    "EvalTable",
    "GradCheckResult",
    "GroupScore",
    "TrainReport",
]
