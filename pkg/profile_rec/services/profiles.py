from __future__ import annotations

import asyncio
import logging
from collections.abc import Awaitable, Callable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from profile_rec.data_access.progress import append_progress, read_progress
from profile_rec.errors import LlmError, ParseError, UsageError
from profile_rec.models import (
    ChatMessage,
    EntityKind,
    InteractionDataset,
    ProfileSet,
    ProgressEntry,
    RawItemRecord,
    TemplateId,
)
from profile_rec.services.llm_client import ChatClient
from profile_rec.services.prompts import (
    DEFAULT_HISTORY_ITEMS,
    HistoryEntry,
    parse_generated,
    parse_revision,
    render_item_gen_input,
    render_prompt,
    render_user_gen_input,
)

logger = logging.getLogger(__name__)

DIVERSIFY_TEMPLATES = {
    EntityKind.user: TemplateId.user_diversify,
    EntityKind.item: TemplateId.item_diversify,
}


@dataclass(slots=True)
class ProfileOutcome:
    profiles: dict[str, ProfileSet]
    failed: list[str] = field(default_factory=list)
    calls: int = 0


async def _ask(
    client: ChatClient,
    messages: list[ChatMessage],
    parse: Callable[[str], str],
    *,
    what: str,
    seed: int | None = None,
) -> str | None:
    """One call plus parse; failures are logged and reported as None."""
    try:
        return parse(await client.complete(messages, seed=seed))
    except ParseError as exc:
        logger.warning("Unparseable response for %s: %s Raw response: %r", what, exc.detail, exc.raw_response)
    except LlmError as exc:
        logger.warning("LLM call for %s failed: %s", what, exc.detail)
    return None


async def _run_capped(concurrency: int, jobs: Sequence[Callable[[], Awaitable[None]]]) -> None:
    semaphore = asyncio.Semaphore(concurrency)

    async def run(job: Callable[[], Awaitable[None]]) -> None:
        async with semaphore:
            await job()

    await asyncio.gather(*(run(job) for job in jobs))


class ProfileDiversifier:
    """Iteratively rephrases profiles, resuming from a per-kind progress file."""

    def __init__(
        self,
        client: ChatClient,
        kind: EntityKind,
        *,
        concurrency: int = 4,
        progress_path: Path | None = None,
    ) -> None:
        self.client = client
        self.kind = kind
        self.concurrency = concurrency
        self.progress_path = progress_path
        self._write_lock = asyncio.Lock()

    def resume(self, profile_sets: Mapping[str, ProfileSet]) -> dict[str, ProfileSet]:
        current = dict(profile_sets)
        if self.progress_path is None:
            return current
        applied = 0
        for entry in read_progress(self.progress_path):
            profile_set = current.get(entry.entity_id)
            if profile_set is not None and entry.iteration == len(profile_set.profiles):
                current[entry.entity_id] = profile_set.with_profile(entry.profile)
                applied += 1
        if applied:
            logger.info("Resumed %d diversified %s profiles from %s", applied, self.kind.value, self.progress_path)
        return current

    async def _record(self, entry: ProgressEntry) -> None:
        if self.progress_path is None:
            return
        async with self._write_lock:
            append_progress(self.progress_path, [entry])

    async def diversify(
        self, profile_sets: Mapping[str, ProfileSet], t: int, *, seed: int | None = None
    ) -> ProfileOutcome:
        if t < 1:
            raise UsageError("Diversification needs t >= 1.")
        outcome = ProfileOutcome(self.resume(profile_sets))
        template = DIVERSIFY_TEMPLATES[self.kind]

        async def chain(entity_id: str) -> None:
            profile_set = outcome.profiles[entity_id]
            while len(profile_set.profiles) < t + 1:
                iteration = len(profile_set.profiles)
                outcome.calls += 1
                revised = await _ask(
                    self.client,
                    render_prompt(template, {"profile": profile_set.profiles[-1]}),
                    parse_revision,
                    what=f"{self.kind.value} {entity_id!r} iteration {iteration}",
                    seed=None if seed is None else seed + iteration,
                )
                if revised is None:
                    outcome.failed.append(entity_id)
                    return
                profile_set = profile_set.with_profile(revised)
                outcome.profiles[entity_id] = profile_set
                await self._record(ProgressEntry(entity_id=entity_id, iteration=iteration, profile=revised))

        await _run_capped(
            self.concurrency, [lambda entity_id=entity_id: chain(entity_id) for entity_id in outcome.profiles]
        )
        outcome.failed.sort()
        if outcome.failed:
            logger.warning("%d %s profiles could not be diversified", len(outcome.failed), self.kind.value)
        return outcome


def user_history(
    user_id: str,
    dataset: InteractionDataset,
    records: Mapping[str, RawItemRecord],
    item_profiles: Mapping[str, ProfileSet],
) -> list[HistoryEntry]:
    history = []
    for pair_user, item_id in dataset.train:
        if pair_user != user_id or item_id not in item_profiles:
            continue
        record = records.get(item_id)
        history.append(
            HistoryEntry(
                item_id=item_id,
                title=record.title if record is not None else item_id,
                profile=item_profiles[item_id].original,
                review=record.review_by(user_id) if record is not None else None,
            )
        )
    return history


class ProfileGenerator:
    """Writes original (index 0) profiles for items, then for users from their histories."""

    def __init__(self, client: ChatClient, *, concurrency: int = 4) -> None:
        self.client = client
        self.concurrency = concurrency

    async def _generate(self, prompts: Mapping[str, list[ChatMessage]], kind: EntityKind) -> ProfileOutcome:
        outcome = ProfileOutcome({})

        async def generate(entity_id: str) -> None:
            outcome.calls += 1
            text = await _ask(self.client, prompts[entity_id], parse_generated, what=f"{kind.value} {entity_id!r}")
            if text is None:
                outcome.failed.append(entity_id)
            else:
                outcome.profiles[entity_id] = ProfileSet(entity_id, (text,))

        await _run_capped(self.concurrency, [lambda entity_id=entity_id: generate(entity_id) for entity_id in prompts])
        outcome.profiles = {entity_id: outcome.profiles[entity_id] for entity_id in prompts if entity_id in outcome.profiles}
        outcome.failed.sort()
        return outcome

    async def generate_items(self, records: Sequence[RawItemRecord]) -> ProfileOutcome:
        prompts = {
            record.item_id: render_prompt(
                TemplateId.item_gen,
                render_item_gen_input(
                    record.title, record.category, record.description, [text for _, text in record.reviews]
                ),
            )
            for record in records
        }
        return await self._generate(prompts, EntityKind.item)

    async def generate_users(
        self,
        dataset: InteractionDataset,
        records: Sequence[RawItemRecord],
        item_profiles: Mapping[str, ProfileSet],
        *,
        seed: int = 0,
        max_items: int = DEFAULT_HISTORY_ITEMS,
    ) -> ProfileOutcome:
        by_id = {record.item_id: record for record in records}
        prompts: dict[str, list[ChatMessage]] = {}
        for position, user_id in enumerate(dataset.users):
            history = user_history(user_id, dataset, by_id, item_profiles)
            if not history:
                logger.warning("User %r has no profiled train items; skipping", user_id)
                continue
            slots = render_user_gen_input(history, np.random.default_rng((seed, position)), max_items=max_items)
            prompts[user_id] = render_prompt(TemplateId.user_gen, slots)
        return await self._generate(prompts, EntityKind.user)
