from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class BackboneKind(str, Enum):
    lightgcn = "lightgcn"
    gccf = "gccf"


class CFConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    backbone: BackboneKind = BackboneKind.lightgcn
    dim: int = Field(64, ge=1)
    layers: int = Field(2, ge=0)
    learning_rate: float = Field(1e-3, gt=0.0)
    epochs: int = Field(50, ge=1)
    batch_size: int = Field(1024, ge=1)
    alignment_weight: float = Field(0.1, ge=0.0)
    alignment_temperature: float = Field(0.2, gt=0.0)
    cutoffs: list[int] = Field(default_factory=lambda: [5, 10, 20], min_length=1)
    selection_metric: str = "recall@20"
    drop_isolated: bool = True
    seed: int = 0
