from __future__ import annotations

import asyncio
import hashlib
import json
import logging
import os
from collections.abc import Sequence
from pathlib import Path
from typing import Protocol

import httpx

from profile_rec.data_access.transcripts import read_transcript
from profile_rec.errors import LlmError, TransientLlmError, UsageError
from profile_rec.models import ChatMessage, LlmClientConfig
from profile_rec.services.prompts import REVISION_MARKER

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})


def request_hash(messages: Sequence[ChatMessage]) -> str:
    payload = json.dumps([message.as_dict() for message in messages], ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ChatClient(Protocol):
    network_calls: int

    async def complete(self, messages: Sequence[ChatMessage], *, seed: int | None = None) -> str: ...

    async def aclose(self) -> None: ...


class HttpChatClient:
    """Chat-completion client for one endpoint with exponential backoff on transient failures."""

    def __init__(self, config: LlmClientConfig, *, transport: httpx.AsyncBaseTransport | None = None) -> None:
        if config.endpoint is None:
            raise UsageError("An LLM endpoint is required for live mode.")
        self.config = config
        self.network_calls = 0
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(config.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        else:
            logger.warning("%s is not set; calling %s without a bearer token", config.token_env, config.endpoint)
        self._client = httpx.AsyncClient(timeout=config.timeout, headers=headers, transport=transport)

    async def _post(self, messages: Sequence[ChatMessage], seed: int | None) -> str:
        body: dict[str, object] = {
            "model": self.config.model,
            "messages": [message.as_dict() for message in messages],
            "temperature": self.config.temperature,
        }
        if seed is not None:
            body["seed"] = seed
        self.network_calls += 1
        try:
            response = await self._client.post(self.config.endpoint, json=body)
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise TransientLlmError(f"LLM request failed: {exc.__class__.__name__}.") from exc
        if response.status_code in RETRYABLE_STATUS:
            raise TransientLlmError(f"LLM endpoint returned status {response.status_code}.")
        if response.is_error:
            raise LlmError(f"LLM endpoint returned status {response.status_code}.")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise LlmError("LLM response is not a chat completion.") from None

    async def complete(self, messages: Sequence[ChatMessage], *, seed: int | None = None) -> str:
        delay = self.config.backoff
        for attempt in range(1, self.config.max_retries + 1):
            try:
                return await self._post(messages, seed)
            except TransientLlmError as exc:
                if attempt == self.config.max_retries:
                    raise
                logger.info(
                    "Attempt %d/%d failed (%s); retrying in %.1fs",
                    attempt,
                    self.config.max_retries,
                    exc.detail,
                    delay,
                )
                await asyncio.sleep(delay)
                delay *= 2.0
        raise AssertionError("unreachable")

    async def aclose(self) -> None:
        await self._client.aclose()


class TranscriptChatClient:
    """Offline client answering from a recorded transcript keyed by request hash."""

    def __init__(self, transcript: Path | dict[str, str], *, fallback: str = "error") -> None:
        self._responses = read_transcript(transcript) if isinstance(transcript, Path) else dict(transcript)
        self._fallback = fallback
        self.network_calls = 0
        self.calls: list[str] = []

    async def complete(self, messages: Sequence[ChatMessage], *, seed: int | None = None) -> str:
        key = request_hash(messages)
        self.calls.append(key)
        response = self._responses.get(key)
        if response is not None:
            return response
        if self._fallback == "echo":
            _, _, payload = messages[-1].content.partition(": ")
            return f"{REVISION_MARKER} {payload}"
        raise LlmError(f"No transcript entry for request {key[:12]}.")

    async def aclose(self) -> None:
        return None


def build_client(config: LlmClientConfig, *, transport: httpx.AsyncBaseTransport | None = None) -> ChatClient:
    if config.mock_transcript is not None:
        return TranscriptChatClient(config.mock_transcript, fallback=config.mock_fallback)
    return HttpChatClient(config, transport=transport)
