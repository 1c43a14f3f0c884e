from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path

from profile_rec.data_access.jsonl import append_rows, read_rows
from profile_rec.models import TranscriptEntry


def read_transcript(path: Path) -> dict[str, str]:
    """Map request hash to response text; the first entry for a hash wins."""
    responses: dict[str, str] = {}
    for entry in read_rows(path, TranscriptEntry):
        responses.setdefault(entry.request_hash, entry.response_text)
    return responses


def append_transcript(path: Path, entries: Iterable[TranscriptEntry]) -> None:
    append_rows(path, entries)
