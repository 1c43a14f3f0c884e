from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from profile_rec.errors import DataError, ParseError
from profile_rec.models import ChatMessage, PromptTemplate, TemplateId

REVISION_MARKER = "REVISED PROFILE:"
PROFILE_MARKER = "PROFILE:"
DEFAULT_HISTORY_ITEMS = 5

_DIVERSIFY_RULES = (
    "Rewrite the profile so that it keeps exactly the same meaning with noticeably different wording "
    "and sentence structure. Do not add or drop preferences or attributes. "
    f'Reply with a single paragraph that begins with "{REVISION_MARKER}" and contains nothing else.'
)

TEMPLATES: dict[TemplateId, PromptTemplate] = {
    TemplateId.item_gen: PromptTemplate(
        template_id=TemplateId.item_gen,
        instruction=(
            "Summarise what kind of user would enjoy the item described below. Use its title, category, "
            "description and user reviews, and write a short, informative paragraph about the item's "
            f'character and likely audience. Begin the paragraph with "{PROFILE_MARKER}".'
        ),
        required_slots=("title",),
        optional_slots=("category", "description", "reviews"),
    ),
    TemplateId.user_gen: PromptTemplate(
        template_id=TemplateId.user_gen,
        instruction=(
            "Describe the preferences of a user from the items they interacted with. Each item is given "
            "with its title, a profile and the user's own review. Write a short paragraph about the kinds "
            f'of items this user would enjoy. Begin the paragraph with "{PROFILE_MARKER}".'
        ),
        required_slots=("history",),
        slot_labels=(("history", "INTERACTED ITEMS"),),
    ),
    TemplateId.item_diversify: PromptTemplate(
        template_id=TemplateId.item_diversify,
        instruction=f"You revise descriptions of items for a recommender system. {_DIVERSIFY_RULES}",
        required_slots=("profile",),
        slot_labels=(("profile", "ITEM PROFILE"),),
    ),
    TemplateId.user_diversify: PromptTemplate(
        template_id=TemplateId.user_diversify,
        instruction=f"You revise descriptions of user preferences for a recommender system. {_DIVERSIFY_RULES}",
        required_slots=("profile",),
        slot_labels=(("profile", "USER PROFILE"),),
    ),
}


def render_prompt(template: PromptTemplate | TemplateId, slots: Mapping[str, str]) -> list[ChatMessage]:
    """System message carries the instruction, the user message one labelled line per slot."""
    if isinstance(template, TemplateId):
        template = TEMPLATES[template]
    unknown = sorted(set(slots) - set(template.slots))
    if unknown:
        raise DataError(f"Unknown slot {unknown[0]!r} for template {template.template_id.value}.")
    lines = []
    for slot in template.slots:
        value = slots.get(slot)
        if slot in template.required_slots and (value is None or not value.strip()):
            raise DataError(f"Missing slot {slot!r} for template {template.template_id.value}.")
        if value is None or not value.strip():
            continue
        lines.append(f"{template.label_for(slot)}: {value.strip()}")
    return [ChatMessage("system", template.instruction), ChatMessage("user", "\n".join(lines))]


def render_item_gen_input(
    title: str, category: str | None, description: str | None, reviews: Sequence[str]
) -> dict[str, str]:
    slots = {"title": title}
    if category:
        slots["category"] = category
    if description:
        slots["description"] = description
    if reviews:
        slots["reviews"] = " | ".join(review.strip() for review in reviews if review.strip())
    return slots


@dataclass(frozen=True, slots=True)
class HistoryEntry:
    item_id: str
    title: str
    profile: str
    review: str | None = None


def render_user_gen_input(
    history: Sequence[HistoryEntry],
    rng: np.random.Generator | int,
    *,
    max_items: int = DEFAULT_HISTORY_ITEMS,
) -> dict[str, str]:
    """Sample up to ``max_items`` interacted items without replacement into one slot."""
    if not history:
        raise DataError("User history is empty.")
    rng = np.random.default_rng(rng)
    chosen = rng.choice(len(history), size=min(max_items, len(history)), replace=False)
    blocks = []
    for number, position in enumerate(sorted(int(index) for index in chosen), start=1):
        entry = history[position]
        block = [f"[{number}] TITLE: {entry.title}", f"PROFILE: {entry.profile}"]
        if entry.review:
            block.append(f"REVIEW: {entry.review}")
        blocks.append("\n".join(block))
    return {"history": "\n\n".join(blocks)}


def parse_revision(response_text: str) -> str:
    start = response_text.find(REVISION_MARKER)
    if start < 0:
        raise ParseError(f'Response lacks the "{REVISION_MARKER}" marker.', raw_response=response_text)
    profile = response_text[start + len(REVISION_MARKER) :].strip()
    if not profile:
        raise ParseError("Response has an empty revised profile.", raw_response=response_text)
    return profile


def parse_generated(response_text: str) -> str:
    start = response_text.find(PROFILE_MARKER)
    profile = response_text[start + len(PROFILE_MARKER) :] if start >= 0 else response_text
    profile = profile.strip()
    if not profile:
        raise ParseError("Response has an empty profile.", raw_response=response_text)
    return profile
