from __future__ import annotations

import logging
from collections.abc import Collection, Mapping, Sequence
from typing import Literal

import numpy as np

from profile_rec.errors import DataError, NumericError, UsageError
from profile_rec.models import EmbeddingStore, EntityKind, ProfileSet, RankedList, ScoredItem
from profile_rec.networks.encoder import TextEncoder, encode
from profile_rec.services.tokenizer import ProfileTokenizer

logger = logging.getLogger(__name__)

Scoring = Literal["cosine", "dot"]


def embed_entities(
    encoder: TextEncoder,
    tokenizer: ProfileTokenizer,
    profile_sets: Mapping[str, ProfileSet],
    profile_index: int,
    kind: EntityKind,
    *,
    entity_ids: Sequence[str] | None = None,
    batch_size: int = 256,
) -> EmbeddingStore:
    ids = list(profile_sets) if entity_ids is None else list(entity_ids)
    texts: list[str] = []
    for entity_id in ids:
        profile_set = profile_sets.get(entity_id)
        if profile_set is None:
            raise DataError(f"No profiles for {kind.value} {entity_id!r}.")
        if profile_index >= len(profile_set.profiles):
            raise DataError(f"{kind.value.capitalize()} {entity_id!r} has no profile at index {profile_index}.")
        texts.append(profile_set.profiles[profile_index])
    vectors = encode(encoder, [tokenizer(text) for text in texts], batch_size=batch_size)
    logger.debug("Embedded %d %s profiles at index %d", len(ids), kind.value, profile_index)
    return EmbeddingStore(kind, tuple(ids), vectors)


def score(u_row: np.ndarray, i_row: np.ndarray) -> float:
    user = np.asarray(u_row, dtype=np.float64)
    item = np.asarray(i_row, dtype=np.float64)
    user_norm = np.linalg.norm(user)
    item_norm = np.linalg.norm(item)
    if user_norm == 0.0 or item_norm == 0.0:
        raise NumericError("Cosine similarity is undefined for a zero vector.")
    return float(np.dot(user, item) / (user_norm * item_norm))


def byte_order_ranks(ids: Sequence[str]) -> np.ndarray:
    order = sorted(range(len(ids)), key=lambda position: ids[position].encode("utf-8"))
    ranks = np.empty(len(ids), dtype=np.int64)
    ranks[order] = np.arange(len(ids))
    return ranks


class ItemRanker:
    """Exact brute-force ranking over one item store.

    Ties break by ascending item-id bytes, so a shorter list is always a
    prefix of a longer one.
    """

    def __init__(self, item_store: EmbeddingStore, scoring: Scoring = "cosine") -> None:
        if scoring not in ("cosine", "dot"):
            raise UsageError(f"Unknown scoring {scoring!r}.")
        self._store = item_store
        self._scoring = scoring
        self._matrix = (
            item_store.unit_vectors() if scoring == "cosine" else item_store.vectors.astype(np.float64)
        )
        self._byte_ranks = byte_order_ranks(item_store.ids)

    @property
    def store(self) -> EmbeddingStore:
        return self._store

    def _query(self, vector: np.ndarray) -> np.ndarray:
        query = np.asarray(vector, dtype=np.float64)
        if self._scoring == "dot":
            return query
        norm = np.linalg.norm(query)
        if norm == 0.0:
            raise NumericError("Cosine similarity is undefined for a zero vector.")
        return query / norm

    def scores(self, vector: np.ndarray) -> np.ndarray:
        return self._matrix @ self._query(vector)

    def rank(
        self, vector: np.ndarray, exclusions: Collection[str] = (), k: int | None = None
    ) -> list[ScoredItem]:
        if k is not None and k < 1:
            raise UsageError("k must be at least 1.")
        scores = self.scores(vector)
        allowed = np.ones(len(self._store), dtype=bool)
        for item_id in exclusions:
            if item_id in self._store:
                allowed[self._store.position(item_id)] = False
        candidates = np.flatnonzero(allowed)
        order = np.lexsort((self._byte_ranks[candidates], -scores[candidates]))
        chosen = candidates[order if k is None else order[:k]]
        return [ScoredItem(self._store.ids[position], float(scores[position])) for position in chosen]


def recommend(
    user_id: str,
    k: int,
    user_store: EmbeddingStore,
    item_store: EmbeddingStore,
    exclusions: Collection[str] = (),
    *,
    ranker: ItemRanker | None = None,
) -> RankedList:
    if user_id not in user_store:
        raise DataError(f"Unknown user id {user_id!r}.")
    ranker = ranker or ItemRanker(item_store)
    return RankedList(user_id, tuple(ranker.rank(user_store.row(user_id), exclusions, k)))


def recommend_for_vector(
    vector: np.ndarray,
    k: int,
    item_store: EmbeddingStore,
    exclusions: Collection[str] = (),
    *,
    label: str = "query",
) -> RankedList:
    return RankedList(label, tuple(ItemRanker(item_store).rank(vector, exclusions, k)))
