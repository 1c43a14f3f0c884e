from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    topics: int = Field(16, ge=1)
    users_per_topic: int = Field(40, ge=1)
    items_per_topic: int = Field(30, ge=1)
    words_per_topic: int = Field(24, ge=1)
    interactions_per_user: int = Field(10, ge=1)
    noise_rate: float = Field(0.1, ge=0.0, lt=1.0)
    profile_length: int = Field(12, ge=1)
    item_core_words: int = Field(6, ge=1)
    diversified: int = Field(3, ge=0)
    popularity: Literal["uniform", "power-law"] = "uniform"
    power_law_exponent: float = Field(1.0, gt=0.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_home_topic(self) -> SyntheticSpec:
        if self.noise_rate == 0 and self.interactions_per_user > self.items_per_topic:
            raise ValueError("without noise interactions_per_user cannot exceed items_per_topic")
        return self
