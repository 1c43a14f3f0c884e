from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum

from profile_rec.errors import DataError


class EntityKind(str, Enum):
    user = "user"
    item = "item"


class SplitName(str, Enum):
    train = "train"
    val = "val"
    test = "test"


Pair = tuple[str, str]


@dataclass(frozen=True, slots=True)
class RawItemRecord:
    item_id: str
    title: str
    category: str | None = None
    description: str | None = None
    reviews: tuple[tuple[str, str], ...] = ()

    @property
    def lacks_text(self) -> bool:
        return not self.description and not self.reviews

    def review_by(self, user_id: str) -> str | None:
        for reviewer, text in self.reviews:
            if reviewer == user_id:
                return text
        return None


@dataclass(frozen=True, slots=True)
class Interaction:
    user_id: str
    item_id: str
    rating: float | None = None

    @property
    def pair(self) -> Pair:
        return (self.user_id, self.item_id)


@dataclass(frozen=True, slots=True)
class ProfileSet:
    """Original profile at index 0 followed by t diversified rewrites."""

    entity_id: str
    profiles: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.profiles:
            raise DataError(f"Profile set for {self.entity_id!r} is empty.")
        if any(not profile.strip() for profile in self.profiles):
            raise DataError(f"Profile set for {self.entity_id!r} has an empty profile.")

    @property
    def original(self) -> str:
        return self.profiles[0]

    @property
    def diversified_count(self) -> int:
        return len(self.profiles) - 1

    def with_profile(self, profile: str) -> ProfileSet:
        return ProfileSet(self.entity_id, (*self.profiles, profile))

    def truncated(self, diversified_count: int) -> ProfileSet:
        return ProfileSet(self.entity_id, self.profiles[: diversified_count + 1])


@dataclass(frozen=True, slots=True)
class InteractionDataset:
    users: tuple[str, ...]
    items: tuple[str, ...]
    train: tuple[Pair, ...]
    val: tuple[Pair, ...]
    test: tuple[Pair, ...]
    user_neighbors: Mapping[str, frozenset[str]] = field(repr=False)
    item_neighbors: Mapping[str, frozenset[str]] = field(repr=False)

    @classmethod
    def build(
        cls,
        users: Iterable[str],
        items: Iterable[str],
        *,
        train: Iterable[Pair] = (),
        val: Iterable[Pair] = (),
        test: Iterable[Pair] = (),
    ) -> InteractionDataset:
        user_ids = tuple(users)
        item_ids = tuple(items)
        known_users = set(user_ids)
        known_items = set(item_ids)
        if len(known_users) != len(user_ids):
            raise DataError("Duplicate user id in dataset.")
        if len(known_items) != len(item_ids):
            raise DataError("Duplicate item id in dataset.")

        splits: dict[SplitName, tuple[Pair, ...]] = {}
        for name, pairs in ((SplitName.train, train), (SplitName.val, val), (SplitName.test, test)):
            checked = tuple(pairs)
            seen: set[Pair] = set()
            for user_id, item_id in checked:
                if user_id not in known_users:
                    raise DataError(f"Unknown user id {user_id!r} in {name.value} split.")
                if item_id not in known_items:
                    raise DataError(f"Unknown item id {item_id!r} in {name.value} split.")
                if (user_id, item_id) in seen:
                    raise DataError(
                        f"Duplicate pair ({user_id!r}, {item_id!r}) in {name.value} split."
                    )
                seen.add((user_id, item_id))
            splits[name] = checked

        user_neighbors: dict[str, set[str]] = {user_id: set() for user_id in user_ids}
        item_neighbors: dict[str, set[str]] = {item_id: set() for item_id in item_ids}
        for user_id, item_id in splits[SplitName.train]:
            user_neighbors[user_id].add(item_id)
            item_neighbors[item_id].add(user_id)

        return cls(
            users=user_ids,
            items=item_ids,
            train=splits[SplitName.train],
            val=splits[SplitName.val],
            test=splits[SplitName.test],
            user_neighbors={key: frozenset(value) for key, value in user_neighbors.items()},
            item_neighbors={key: frozenset(value) for key, value in item_neighbors.items()},
        )

    def split(self, name: SplitName | str) -> tuple[Pair, ...]:
        return getattr(self, SplitName(name).value)

    def relevant_items(self, name: SplitName | str) -> dict[str, set[str]]:
        relevant: dict[str, set[str]] = {}
        for user_id, item_id in self.split(name):
            relevant.setdefault(user_id, set()).add(item_id)
        return relevant


@dataclass(frozen=True, slots=True)
class Corpus:
    name: str
    records: tuple[RawItemRecord, ...]
    item_profiles: Mapping[str, ProfileSet]
    user_profiles: Mapping[str, ProfileSet]
    dataset: InteractionDataset
