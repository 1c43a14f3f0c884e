from __future__ import annotations

import logging
import math
from collections.abc import Collection, Mapping, Sequence

from profile_rec.errors import DataError, UsageError
from profile_rec.models import (
    EmbeddingStore,
    EntityKind,
    InteractionDataset,
    MetricsReport,
    ProfileSet,
    SplitName,
    metric_key,
)
from profile_rec.networks.encoder import TextEncoder
from profile_rec.services.retrieval import ItemRanker, Scoring, embed_entities
from profile_rec.services.tokenizer import ProfileTokenizer

logger = logging.getLogger(__name__)

METRIC_NAMES = ("recall", "ndcg")


def recall_at_k(ranked_ids: Sequence[str], relevant: Collection[str], k: int) -> float:
    hits = sum(1 for item_id in ranked_ids[:k] if item_id in relevant)
    return hits / len(relevant)


def ndcg_at_k(ranked_ids: Sequence[str], relevant: Collection[str], k: int) -> float:
    dcg = sum(
        1.0 / math.log2(rank + 1)
        for rank, item_id in enumerate(ranked_ids[:k], start=1)
        if item_id in relevant
    )
    idcg = sum(1.0 / math.log2(rank + 1) for rank in range(1, min(k, len(relevant)) + 1))
    return dcg / idcg


def parse_metric(name: str) -> tuple[str, int]:
    metric, _, cutoff = name.partition("@")
    if metric not in METRIC_NAMES or not cutoff.isdigit() or int(cutoff) < 1:
        raise UsageError(f"Unknown metric {name!r}.")
    return metric, int(cutoff)


def parse_cutoffs(text: str) -> list[int]:
    try:
        cutoffs = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"Invalid cutoff list {text!r}.") from None
    if not cutoffs or any(cutoff < 1 for cutoff in cutoffs):
        raise UsageError(f"Invalid cutoff list {text!r}.")
    return cutoffs


def user_metrics(ranked_ids: Sequence[str], relevant: Collection[str], cutoffs: Sequence[int]) -> dict[str, float]:
    metrics: dict[str, float] = {}
    for cutoff in cutoffs:
        metrics[metric_key("recall", cutoff)] = recall_at_k(ranked_ids, relevant, cutoff)
        metrics[metric_key("ndcg", cutoff)] = ndcg_at_k(ranked_ids, relevant, cutoff)
    return metrics


def per_user_all_rank(
    user_store: EmbeddingStore,
    item_store: EmbeddingStore,
    dataset: InteractionDataset,
    split: SplitName | str,
    cutoffs: Sequence[int],
    *,
    scoring: Scoring = "cosine",
) -> dict[str, dict[str, float]]:
    """Metrics for every user with at least one relevant item in ``split``.

    Candidates are all items except the user's train interactions.
    """
    relevant = dataset.relevant_items(split)
    ranker = ItemRanker(item_store, scoring)
    depth = max(cutoffs)
    results: dict[str, dict[str, float]] = {}
    for user_id in dataset.users:
        targets = relevant.get(user_id)
        if not targets:
            continue
        if user_id not in user_store:
            raise DataError(f"User {user_id!r} is missing from the embedding store.")
        for item_id in targets:
            if item_id not in item_store:
                raise DataError(f"Item {item_id!r} is missing from the embedding store.")
        ranked = ranker.rank(user_store.row(user_id), dataset.user_neighbors[user_id], depth)
        results[user_id] = user_metrics([entry.item_id for entry in ranked], targets, cutoffs)
    return results


def evaluate_all_rank(
    user_store: EmbeddingStore,
    item_store: EmbeddingStore,
    dataset: InteractionDataset,
    split: SplitName | str,
    cutoffs: Sequence[int],
    *,
    scoring: Scoring = "cosine",
) -> dict[str, float]:
    per_user = per_user_all_rank(user_store, item_store, dataset, split, cutoffs, scoring=scoring)
    keys = [metric_key(name, cutoff) for cutoff in cutoffs for name in METRIC_NAMES]
    if not per_user:
        logger.warning("No users with relevant items in the %s split", SplitName(split).value)
        return {key: 0.0 for key in keys}
    return {key: sum(metrics[key] for metrics in per_user.values()) / len(per_user) for key in keys}


def profile_rounds(t: int, include_original: bool) -> list[int]:
    rounds = list(range(1, t + 1))
    if include_original or not rounds:
        rounds.insert(0, 0)
    return rounds


def evaluate_multi_profile(
    encoder: TextEncoder,
    tokenizer: ProfileTokenizer,
    user_profiles: Mapping[str, ProfileSet],
    item_profiles: Mapping[str, ProfileSet],
    dataset: InteractionDataset,
    split: SplitName | str,
    cutoffs: Sequence[int],
    t: int,
    *,
    include_original: bool = False,
) -> MetricsReport:
    """Average all-rank metrics over rounds that pair profile j of users with profile j of items."""
    for profiles, kind in ((user_profiles, EntityKind.user), (item_profiles, EntityKind.item)):
        for entity_id, profile_set in profiles.items():
            if profile_set.diversified_count < t:
                raise DataError(
                    f"{kind.value.capitalize()} {entity_id!r} has {profile_set.diversified_count} "
                    f"diversified profiles, {t} required."
                )
    rounds: list[dict[str, float]] = []
    for index in profile_rounds(t, include_original):
        user_store = embed_entities(
            encoder, tokenizer, user_profiles, index, EntityKind.user, entity_ids=dataset.users
        )
        item_store = embed_entities(
            encoder, tokenizer, item_profiles, index, EntityKind.item, entity_ids=dataset.items
        )
        rounds.append(evaluate_all_rank(user_store, item_store, dataset, split, cutoffs))
        logger.info("Round %d on %s: %s", index, SplitName(split).value, rounds[-1])
    return MetricsReport.from_rounds(rounds)
