from __future__ import annotations

from enum import Enum
from typing import Annotated

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

OBJECTIVE_ALIASES = {"contrastive-exclusive": "contrastive-paper"}


class Objective(str, Enum):
    contrastive_paper = "contrastive-paper"
    contrastive_standard = "contrastive-standard"
    bpr = "bpr"

    @classmethod
    def _missing_(cls, value: object) -> Objective | None:
        if isinstance(value, str) and value in OBJECTIVE_ALIASES:
            return cls(OBJECTIVE_ALIASES[value])
        return None

    @property
    def is_contrastive(self) -> bool:
        return self is not Objective.bpr


def _canonical_objective(value: object) -> object:
    if isinstance(value, str) and not isinstance(value, Objective):
        return OBJECTIVE_ALIASES.get(value, value)
    return value


ObjectiveField = Annotated[Objective, BeforeValidator(_canonical_objective)]


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    temperature: float = Field(0.05, gt=0.0)
    mlm_weight: float = Field(0.1, ge=0.0)
    mask_ratio: float = Field(0.15, ge=0.0, lt=1.0)
    mask_only: bool = False
    learning_rate: float = Field(5e-5, gt=0.0)
    epochs: int = Field(25, ge=1)
    max_steps: int | None = Field(None, ge=1)
    batch_size: int = Field(64, ge=1)
    eval_interval: int = Field(1000, ge=1)
    selection_metric: str = "recall@20"
    objective: ObjectiveField = Objective.contrastive_paper
    augmentation_count: int | None = Field(None, ge=0)
    grad_clip: float | None = Field(5.0, gt=0.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_batch(self) -> TrainConfig:
        if self.objective.is_contrastive and self.batch_size < 2:
            raise ValueError("contrastive objectives need batch_size >= 2")
        return self


class TrainingBatchReport(BaseModel):
    step: int
    loss_con: float
    loss_mlm: float
    loss: float
    grad_norm: float


class ValidationRecord(BaseModel):
    step: int
    metrics: dict[str, float]
    selected: bool
