from __future__ import annotations

from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class NormStyle(str, Enum):
    pre = "pre"
    post = "post"


class EncoderPreset(str, Enum):
    tiny = "tiny"
    small = "small"
    base = "base"
    large = "large"


PRESETS: dict[EncoderPreset, dict[str, int]] = {
    EncoderPreset.tiny: {"layers": 2, "hidden_size": 16, "heads": 2, "vocab_size": 64, "max_len": 16},
    EncoderPreset.small: {"layers": 6, "hidden_size": 768, "heads": 12},
    EncoderPreset.base: {"layers": 12, "hidden_size": 768, "heads": 12},
    EncoderPreset.large: {"layers": 24, "hidden_size": 1024, "heads": 16},
}


class EncoderConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    layers: int = Field(..., ge=1)
    hidden_size: int = Field(..., ge=1)
    heads: int = Field(..., ge=1)
    ffn_size: int | None = Field(None, ge=1)
    vocab_size: int = Field(..., ge=4)
    max_len: int = Field(512, ge=2)
    output_size: int | None = Field(None, ge=1)
    dropout: float = Field(0.1, ge=0.0, lt=1.0)
    norm_style: NormStyle = NormStyle.pre
    tie_mlm_weights: bool = True

    @model_validator(mode="after")
    def _check_heads(self) -> EncoderConfig:
        if self.hidden_size % self.heads != 0:
            raise ValueError("hidden_size must be divisible by heads")
        return self

    @property
    def feed_forward_size(self) -> int:
        return self.ffn_size or 4 * self.hidden_size

    @property
    def embedding_size(self) -> int:
        return self.output_size or self.hidden_size

    @property
    def head_size(self) -> int:
        return self.hidden_size // self.heads

    @classmethod
    def from_preset(cls, preset: EncoderPreset | str, **overrides: Any) -> EncoderConfig:
        values: dict[str, Any] = dict(PRESETS[EncoderPreset(preset)])
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)
