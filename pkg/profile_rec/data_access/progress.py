from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path

from profile_rec.data_access.jsonl import append_rows, read_rows
from profile_rec.models import EntityKind, ProgressEntry


def progress_file(root: Path, kind: EntityKind) -> Path:
    return root / f"progress-{kind.value}.jsonl"


def read_progress(path: Path) -> list[ProgressEntry]:
    return read_rows(path, ProgressEntry, missing_ok=True)


def append_progress(path: Path, entries: Iterable[ProgressEntry]) -> None:
    append_rows(path, entries)
