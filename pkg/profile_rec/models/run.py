from __future__ import annotations

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from profile_rec.models.encoder import EncoderConfig, EncoderPreset, NormStyle
from profile_rec.models.metrics import MetricsReport
from profile_rec.models.training import ObjectiveField, TrainConfig


class EncoderSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: EncoderPreset | None = EncoderPreset.tiny
    layers: int | None = Field(None, ge=1)
    hidden_size: int | None = Field(None, ge=1)
    heads: int | None = Field(None, ge=1)
    ffn_size: int | None = Field(None, ge=1)
    max_len: int | None = Field(None, ge=2)
    output_size: int | None = Field(None, ge=1)
    dropout: float | None = Field(None, ge=0.0, lt=1.0)
    norm_style: NormStyle | None = None
    tie_mlm_weights: bool | None = None

    def resolve(self, vocab_size: int) -> EncoderConfig:
        explicit = self.model_dump(exclude={"preset"}, exclude_none=True)
        explicit["vocab_size"] = vocab_size
        if self.preset is None:
            return EncoderConfig(**explicit)
        return EncoderConfig.from_preset(self.preset, **explicit)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    encoder: EncoderSection = Field(default_factory=EncoderSection)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: list[Path] = Field(default_factory=list)
    output_dir: Path = Path("runs/default")
    vocab_size: int = Field(30000, ge=5)
    seed: int | None = None
    workers: int = Field(1, ge=1)

    def seeded(self) -> RunConfig:
        if self.seed is None:
            return self
        return self.model_copy(update={"train": self.train.model_copy(update={"seed": self.seed})})


class RunSummary(BaseModel):
    """Final test evaluation of one training run, read back by the scaling report."""

    preset: str
    augmentation_count: int = Field(..., ge=0)
    objective: ObjectiveField
    metrics: MetricsReport
