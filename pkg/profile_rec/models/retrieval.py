from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from profile_rec.errors import DataError, NumericError
from profile_rec.models.corpus import EntityKind


@dataclass(frozen=True, slots=True)
class EmbeddingStore:
    kind: EntityKind
    ids: tuple[str, ...]
    vectors: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.ids):
            raise DataError("Embedding store rows do not match its ids.")
        index = {entity_id: row for row, entity_id in enumerate(self.ids)}
        if len(index) != len(self.ids):
            raise DataError("Embedding store contains duplicate ids.")
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, entity_id: object) -> bool:
        return entity_id in self._index

    def position(self, entity_id: str) -> int:
        try:
            return self._index[entity_id]
        except KeyError:
            raise DataError(f"Unknown {self.kind.value} id {entity_id!r} in embedding store.") from None

    def row(self, entity_id: str) -> np.ndarray:
        return self.vectors[self.position(entity_id)]

    def rows(self, entity_ids: Iterable[str]) -> np.ndarray:
        return self.vectors[[self.position(entity_id) for entity_id in entity_ids]]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors.astype(np.float64), axis=1)

    def unit_vectors(self) -> np.ndarray:
        norms = self.norms()
        if np.any(norms == 0.0):
            bad = self.ids[int(np.argmin(norms))]
            raise NumericError(f"Embedding for {self.kind.value} {bad!r} has zero norm.")
        return self.vectors.astype(np.float64) / norms[:, None]

    def scaled(self, factor: float) -> EmbeddingStore:
        return EmbeddingStore(self.kind, self.ids, (self.vectors * factor).astype(self.vectors.dtype))


@dataclass(frozen=True, slots=True)
class ScoredItem:
    item_id: str
    score: float


@dataclass(frozen=True, slots=True)
class RankedList:
    user_id: str
    items: tuple[ScoredItem, ...]

    @property
    def item_ids(self) -> list[str]:
        return [entry.item_id for entry in self.items]
