from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from profile_rec.data_access.jsonl import read_lines, validate_row, write_lines
from profile_rec.errors import DataError
from profile_rec.models import (
    Corpus,
    EntityKind,
    Interaction,
    InteractionDataset,
    ProfileSet,
    RawItemRecord,
    SplitName,
)

logger = logging.getLogger(__name__)

ITEMS_FILE = "items.jsonl"
USERS_FILE = "users.jsonl"
ALL_INTERACTIONS_FILE = "all.tsv"


class ReviewRow(BaseModel):
    user_id: str = Field(..., min_length=1)
    text: str


class ItemRow(BaseModel):
    model_config = ConfigDict(extra="ignore")

    item_id: str = Field(..., min_length=1)
    title: str = ""
    category: str | None = None
    description: str | None = None
    reviews: list[ReviewRow] = Field(default_factory=list)
    profiles: list[str] = Field(default_factory=list)


class UserRow(BaseModel):
    model_config = ConfigDict(extra="ignore")

    user_id: str = Field(..., min_length=1)
    profiles: list[str] = Field(default_factory=list)


def split_file(split: SplitName) -> str:
    return f"{split.value}.tsv"


def read_items(path: Path) -> tuple[list[RawItemRecord], dict[str, ProfileSet]]:
    records: list[RawItemRecord] = []
    profiles: dict[str, ProfileSet] = {}
    seen: set[str] = set()
    for line_number, line in read_lines(path):
        row = validate_row(ItemRow, path, line_number, line)
        if row.item_id in seen:
            raise DataError(f"{path.name}:{line_number}: duplicate item id {row.item_id!r}.")
        seen.add(row.item_id)
        record = RawItemRecord(
            item_id=row.item_id,
            title=row.title,
            category=row.category,
            description=row.description,
            reviews=tuple((review.user_id, review.text) for review in row.reviews),
        )
        if record.lacks_text:
            logger.debug("Item %r has neither description nor reviews", row.item_id)
        records.append(record)
        if row.profiles:
            profiles[row.item_id] = ProfileSet(row.item_id, tuple(row.profiles))
    return records, profiles


def read_users(path: Path) -> tuple[list[str], dict[str, ProfileSet]]:
    user_ids: list[str] = []
    profiles: dict[str, ProfileSet] = {}
    seen: set[str] = set()
    for line_number, line in read_lines(path):
        row = validate_row(UserRow, path, line_number, line)
        if row.user_id in seen:
            raise DataError(f"{path.name}:{line_number}: duplicate user id {row.user_id!r}.")
        seen.add(row.user_id)
        user_ids.append(row.user_id)
        if row.profiles:
            profiles[row.user_id] = ProfileSet(row.user_id, tuple(row.profiles))
    return user_ids, profiles


def read_interactions(path: Path) -> list[Interaction]:
    interactions: list[Interaction] = []
    for line_number, line in read_lines(path):
        fields = line.split("\t")
        if len(fields) not in (2, 3) or not fields[0] or not fields[1]:
            raise DataError(f"{path.name}:{line_number}: malformed line.")
        rating: float | None = None
        if len(fields) == 3 and fields[2].strip():
            try:
                rating = float(fields[2])
            except ValueError:
                raise DataError(f"{path.name}:{line_number}: malformed rating.") from None
        interactions.append(Interaction(fields[0], fields[1], rating))
    return interactions


def load_corpus(
    items_path: Path,
    users_path: Path,
    interaction_paths: Mapping[SplitName, Path],
    *,
    name: str | None = None,
) -> Corpus:
    records, item_profiles = read_items(items_path)
    user_ids, user_profiles = read_users(users_path)
    splits = {
        split: [interaction.pair for interaction in read_interactions(path)]
        for split, path in interaction_paths.items()
    }
    dataset = InteractionDataset.build(
        user_ids,
        [record.item_id for record in records],
        train=splits.get(SplitName.train, ()),
        val=splits.get(SplitName.val, ()),
        test=splits.get(SplitName.test, ()),
    )
    logger.info(
        "Loaded %d users, %d items, %d/%d/%d train/val/test pairs",
        len(dataset.users),
        len(dataset.items),
        len(dataset.train),
        len(dataset.val),
        len(dataset.test),
    )
    return Corpus(
        name=name or items_path.parent.name,
        records=tuple(records),
        item_profiles=item_profiles,
        user_profiles=user_profiles,
        dataset=dataset,
    )


def write_items(
    path: Path, records: Iterable[RawItemRecord], profiles: Mapping[str, ProfileSet]
) -> None:
    lines = []
    for record in records:
        row = ItemRow(
            item_id=record.item_id,
            title=record.title,
            category=record.category,
            description=record.description,
            reviews=[ReviewRow(user_id=user_id, text=text) for user_id, text in record.reviews],
            profiles=list(profiles[record.item_id].profiles) if record.item_id in profiles else [],
        )
        lines.append(row.model_dump_json(exclude_none=True))
    write_lines(path, lines)


def write_users(path: Path, user_ids: Iterable[str], profiles: Mapping[str, ProfileSet]) -> None:
    lines = [
        UserRow(
            user_id=user_id,
            profiles=list(profiles[user_id].profiles) if user_id in profiles else [],
        ).model_dump_json()
        for user_id in user_ids
    ]
    write_lines(path, lines)


def write_interactions(path: Path, interactions: Iterable[Interaction]) -> None:
    lines = []
    for interaction in interactions:
        fields = [interaction.user_id, interaction.item_id]
        if interaction.rating is not None:
            fields.append(repr(interaction.rating))
        lines.append("\t".join(fields))
    write_lines(path, lines)


class CorpusStore:
    """A data directory holding items.jsonl, users.jsonl and split tsv files."""

    def __init__(self, root: Path) -> None:
        self._root = root

    @property
    def root(self) -> Path:
        return self._root

    def path(self, name: str) -> Path:
        return self._root / name

    def has_splits(self) -> bool:
        return any(self.path(split_file(split)).exists() for split in SplitName)

    def load(self) -> Corpus:
        interaction_paths = {
            split: self.path(split_file(split))
            for split in SplitName
            if self.path(split_file(split)).exists()
        }
        if not interaction_paths:
            raise DataError(f"No interaction split files under {self._root}.")
        return load_corpus(
            self.path(ITEMS_FILE),
            self.path(USERS_FILE),
            interaction_paths,
            name=self._root.name,
        )

    def load_all_interactions(self) -> list[Interaction]:
        return read_interactions(self.path(ALL_INTERACTIONS_FILE))

    def save(
        self,
        *,
        records: Iterable[RawItemRecord],
        item_profiles: Mapping[str, ProfileSet],
        user_ids: Iterable[str],
        user_profiles: Mapping[str, ProfileSet],
        splits: Mapping[SplitName, Iterable[Interaction]],
    ) -> list[Path]:
        written = [self.path(ITEMS_FILE), self.path(USERS_FILE)]
        write_items(written[0], records, item_profiles)
        write_users(written[1], user_ids, user_profiles)
        for split, interactions in splits.items():
            target = self.path(split_file(split))
            write_interactions(target, interactions)
            written.append(target)
        return written

    def save_profiles(self, kind: EntityKind, profiles: Mapping[str, ProfileSet]) -> Path:
        corpus = self.load()
        if kind is EntityKind.item:
            merged = {**corpus.item_profiles, **profiles}
            write_items(self.path(ITEMS_FILE), corpus.records, merged)
            return self.path(ITEMS_FILE)
        merged = {**corpus.user_profiles, **profiles}
        write_users(self.path(USERS_FILE), corpus.dataset.users, merged)
        return self.path(USERS_FILE)
