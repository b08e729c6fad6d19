"""
Per-epoch learning-rate schedules
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ribforge.core.errors import ConfigError


class LrSchedule(BaseModel):
    """constant | linear_to_zero(total_epochs) | constant_then_linear(n_const, n_decay)"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "linear_to_zero", "constant_then_linear"] = "constant"
    base_lr: float = Field(..., ge=0)
    total_epochs: Optional[int] = Field(default=None, ge=1)
    n_const: Optional[int] = Field(default=None, ge=0)
    n_decay: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_kind_fields(self):
        if self.kind == "linear_to_zero" and self.total_epochs is None:
            raise ValueError("linear_to_zero needs total_epochs")
        if self.kind == "constant_then_linear" and (self.n_const is None or self.n_decay is None):
            raise ValueError("constant_then_linear needs n_const and n_decay")
        return self

    @property
    def horizon(self) -> Optional[int]:
        if self.kind == "linear_to_zero":
            return self.total_epochs
        if self.kind == "constant_then_linear":
            return self.n_const + self.n_decay
        return self.total_epochs


def lr_at(schedule: LrSchedule, epoch: int) -> float:
    """Learning rate at a 0-based epoch; epoch == horizon gives the terminal value"""
    horizon = schedule.horizon
    if epoch < 0 or (horizon is not None and epoch > horizon):
        raise ConfigError(f"epoch {epoch} outside schedule range [0, {horizon}]")
    base = schedule.base_lr
    if schedule.kind == "constant":
        return base
    if schedule.kind == "linear_to_zero":
        return base * (1.0 - epoch / schedule.total_epochs)
    if epoch < schedule.n_const:
        return base
    return base * (1.0 - (epoch - schedule.n_const) / schedule.n_decay)
