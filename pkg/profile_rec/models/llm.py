from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TemplateId(str, Enum):
    item_gen = "item-gen"
    user_gen = "user-gen"
    item_diversify = "item-diversify"
    user_diversify = "user-diversify"


@dataclass(frozen=True, slots=True)
class PromptTemplate:
    template_id: TemplateId
    instruction: str
    required_slots: tuple[str, ...]
    optional_slots: tuple[str, ...] = ()
    slot_labels: tuple[tuple[str, str], ...] = ()

    @property
    def slots(self) -> tuple[str, ...]:
        return self.required_slots + self.optional_slots

    def label_for(self, slot: str) -> str:
        return dict(self.slot_labels).get(slot, slot.upper())


@dataclass(frozen=True, slots=True)
class ChatMessage:
    role: str
    content: str

    def as_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


class LlmClientConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    endpoint: str | None = None
    model: str = "gpt-3.5-turbo"
    token_env: str = "PROFILE_REC_LLM_TOKEN"
    timeout: float = Field(30.0, gt=0.0)
    max_retries: int = Field(3, ge=1)
    backoff: float = Field(1.0, ge=0.0)
    temperature: float = Field(1.0, ge=0.0)
    concurrency: int = Field(4, ge=1)
    mock_transcript: Path | None = None
    mock_fallback: Literal["error", "echo"] = "error"

    @model_validator(mode="after")
    def _one_backend(self) -> LlmClientConfig:
        if (self.endpoint is None) == (self.mock_transcript is None):
            raise ValueError("exactly one of endpoint or mock_transcript must be set")
        return self


class ProgressEntry(BaseModel):
    entity_id: str
    iteration: int = Field(..., ge=1)
    profile: str = Field(..., min_length=1)


class TranscriptEntry(BaseModel):
    request_hash: str
    response_text: str
