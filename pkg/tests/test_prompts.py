import pytest

from profile_rec.errors import DataError, ParseError
from profile_rec.models import TemplateId
from profile_rec.services.prompts import (
    TEMPLATES,
    HistoryEntry,
    parse_generated,
    parse_revision,
    render_item_gen_input,
    render_prompt,
    render_user_gen_input,
)


def history(count: int) -> list[HistoryEntry]:
    return [
        HistoryEntry(
            item_id=f"i{index}",
            title=f"Title {index}",
            profile=f"Profile {index}",
            review=f"Review {index}" if index % 2 == 0 else None,
        )
        for index in range(count)
    ]


def test_user_diversify_prompt_labels_the_profile() -> None:
    messages = render_prompt(TemplateId.user_diversify, {"profile": "P"})

    assert [message.role for message in messages] == ["system", "user"]
    assert messages[0].content == TEMPLATES[TemplateId.user_diversify].instruction
    assert messages[1].content.startswith("USER PROFILE: P")


def test_item_diversify_prompt_labels_the_profile() -> None:
    messages = render_prompt(TemplateId.item_diversify, {"profile": "Warm wool socks."})

    assert messages[1].content == "ITEM PROFILE: Warm wool socks."


def test_render_prompt_is_pure() -> None:
    slots = {"title": "Dune", "category": "Books"}

    assert render_prompt(TemplateId.item_gen, slots) == render_prompt(TemplateId.item_gen, slots)


def test_render_prompt_rejects_missing_and_unknown_slots() -> None:
    with pytest.raises(DataError) as exc:
        render_prompt(TemplateId.item_gen, {"category": "Books"})
    assert exc.value.detail == "Missing slot 'title' for template item-gen."

    with pytest.raises(DataError) as exc:
        render_prompt(TemplateId.user_diversify, {"profile": "P", "mood": "x"})
    assert exc.value.detail == "Unknown slot 'mood' for template user-diversify."


def test_item_gen_input_skips_empty_fields() -> None:
    slots = render_item_gen_input("Dune", None, "Desert planet epic.", ["Great", " ", "Long "])

    assert slots == {"title": "Dune", "description": "Desert planet epic.", "reviews": "Great | Long"}
    content = render_prompt(TemplateId.item_gen, slots)[1].content
    assert content.splitlines() == ["TITLE: Dune", "DESCRIPTION: Desert planet epic.", "REVIEWS: Great | Long"]


def test_user_gen_input_samples_at_most_five_items() -> None:
    slots = render_user_gen_input(history(8), 3)

    blocks = slots["history"].split("\n\n")
    assert len(blocks) == 5
    assert [block.split("\n")[0].split("]")[0] for block in blocks] == ["[1", "[2", "[3", "[4", "[5"]
    assert slots == render_user_gen_input(history(8), 3)


def test_user_gen_input_includes_reviews_when_present() -> None:
    slots = render_user_gen_input(history(2), 0)

    assert slots["history"] == (
        "[1] TITLE: Title 0\nPROFILE: Profile 0\nREVIEW: Review 0\n\n[2] TITLE: Title 1\nPROFILE: Profile 1"
    )
    assert render_prompt(TemplateId.user_gen, slots)[1].content.startswith("INTERACTED ITEMS: [1] TITLE: Title 0")


def test_user_gen_input_needs_history() -> None:
    with pytest.raises(DataError):
        render_user_gen_input([], 0)


def test_parse_revision() -> None:
    assert parse_revision("REVISED PROFILE: An individual who…") == "An individual who…"
    assert parse_revision("Sure! Here it is.\nREVISED PROFILE:  Likes tea. \n") == "Likes tea."


def test_parse_revision_is_case_sensitive() -> None:
    with pytest.raises(ParseError) as exc:
        parse_revision("revised profile: x")

    assert exc.value.raw_response == "revised profile: x"
    assert exc.value.detail == 'Response lacks the "REVISED PROFILE:" marker.'


def test_parse_revision_rejects_empty_profile() -> None:
    with pytest.raises(ParseError):
        parse_revision("REVISED PROFILE:   ")


def test_parse_generated_strips_optional_marker() -> None:
    assert parse_generated("PROFILE: Enjoys hiking gear.") == "Enjoys hiking gear."
    assert parse_generated("  Enjoys hiking gear. ") == "Enjoys hiking gear."
