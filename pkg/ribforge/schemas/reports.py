"""
Report documents written by the pipelines
"""
import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class GroupScore(BaseModel):
    model_config = ConfigDict(extra="forbid")

    miou: float = Field(..., ge=0.0, le=1.0)
    mdsc: float = Field(..., ge=0.0, le=1.0)


class ChannelScore(BaseModel):
    model_config = ConfigDict(extra="forbid")

    channel: str
    group: str
    iou: float = Field(..., ge=0.0, le=1.0)
    dice: float = Field(..., ge=0.0, le=1.0)


class EvalTable(BaseModel):
    """Per-group mIOU/mDSC plus the per-channel values they average"""

    model_config = ConfigDict(extra="forbid")

    groups: Dict[str, GroupScore]
    per_channel: List[ChannelScore]
    n_samples: int = Field(..., ge=0)

    def miou(self, group: str = "ribs") -> float:
        return self.groups[group].miou

    def mdsc(self, group: str = "ribs") -> float:
        return self.groups[group].mdsc

    def mean_miou(self) -> float:
        return math.fsum(g.miou for g in self.groups.values()) / len(self.groups)

    def mean_mdsc(self) -> float:
        return math.fsum(g.mdsc for g in self.groups.values()) / len(self.groups)


class TrainReport(BaseModel):
    """Loss curves, evaluation, config echo and weight digests of one stage"""

    model_config = ConfigDict(extra="forbid")

    stage: str
    config: Dict[str, Any]
    losses: Dict[str, List[float]]
    eval: Optional[EvalTable] = None
    weight_digest: str
    weight_digests: Dict[str, str] = Field(default_factory=dict)
    selected_epoch: Optional[int] = None
    # wall-clock; written to timing.json, never to report.json
    elapsed_s: float = Field(default=0.0, ge=0.0, exclude=True)

    @field_validator("losses")
    @classmethod
    def _finite_and_aligned(cls, v: Dict[str, List[float]]) -> Dict[str, List[float]]:
        lengths = {len(series) for series in v.values()}
        if len(lengths) > 1:
            sizes = {k: len(s) for k, s in v.items()}
            raise ValueError(f"loss series lengths differ: {sizes}")
        for name, series in v.items():
            if not all(math.isfinite(x) for x in series):
                raise ValueError(f"loss series '{name}' contains non-finite values")
        return v

    @property
    def epochs_run(self) -> int:
        return len(next(iter(self.losses.values()), []))


class AblationRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    label: str
    n_real: int = Field(..., ge=0)
    n_synthetic: int = Field(..., ge=0)
    flags: Dict[str, Any] = Field(default_factory=dict)
    eval: EvalTable

    @model_validator(mode="after")
    def _has_groups(self):
        if not self.eval.groups:
            raise ValueError("ablation row without evaluation groups")
        return self


class GradCheckResult(BaseModel):
    model_config = ConfigDict(extra="forbid")

    op: str
    seed: int
    max_rel_error: float
    passed: bool
