from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Iterable, Sequence

import numpy as np

from profile_rec.errors import UsageError
from profile_rec.models import Interaction

logger = logging.getLogger(__name__)

MIN_SPLITTABLE = 3


def filter_ratings(interactions: Iterable[Interaction], min_rating: float) -> list[Interaction]:
    """Keep interactions rated strictly above ``min_rating``; unrated ones pass."""
    return [
        interaction
        for interaction in interactions
        if interaction.rating is None or interaction.rating > min_rating
    ]


def dedupe_interactions(interactions: Iterable[Interaction]) -> list[Interaction]:
    seen: set[tuple[str, str]] = set()
    deduped: list[Interaction] = []
    for interaction in interactions:
        if interaction.pair in seen:
            continue
        seen.add(interaction.pair)
        deduped.append(interaction)
    return deduped


def kcore_filter(interactions: Sequence[Interaction], k: int) -> list[Interaction]:
    """Drop users and items with fewer than ``k`` interactions until none remain.

    The k-core of a graph is unique, so the surviving set does not depend on
    input order; the relative order of surviving interactions is preserved.
    """
    if k < 1:
        raise UsageError("k-core threshold must be at least 1.")
    surviving = list(interactions)
    rounds = 0
    while True:
        user_degree = Counter(interaction.user_id for interaction in surviving)
        item_degree = Counter(interaction.item_id for interaction in surviving)
        kept = [
            interaction
            for interaction in surviving
            if user_degree[interaction.user_id] >= k and item_degree[interaction.item_id] >= k
        ]
        rounds += 1
        if len(kept) == len(surviving):
            break
        surviving = kept
    logger.debug("k-core(%d) reached a fixpoint after %d rounds", k, rounds)
    return surviving


def split_counts(total: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """Per-user (train, val, test) sizes; users with fewer than three pairs keep all in train."""
    if total < MIN_SPLITTABLE:
        return total, 0, 0
    weight = sum(ratios)
    val = max(1, math.floor(total * ratios[1] / weight + 0.5))
    test = max(1, math.floor(total * ratios[2] / weight + 0.5))
    while total - val - test < 1:
        if test > 1:
            test -= 1
        else:
            val -= 1
    return total - val - test, val, test


def split_interactions(
    interactions: Sequence[Interaction],
    ratios: Sequence[float],
    seed: int,
) -> tuple[list[Interaction], list[Interaction], list[Interaction]]:
    if len(ratios) != 3 or any(ratio <= 0 for ratio in ratios):
        raise UsageError("Split ratios must be three positive numbers.")

    by_user: dict[str, list[Interaction]] = {}
    for interaction in interactions:
        by_user.setdefault(interaction.user_id, []).append(interaction)

    rng = np.random.default_rng(seed)
    train: list[Interaction] = []
    val: list[Interaction] = []
    test: list[Interaction] = []
    for user_id in sorted(by_user):
        owned = sorted(by_user[user_id], key=lambda interaction: interaction.item_id)
        order = rng.permutation(len(owned))
        shuffled = [owned[position] for position in order]
        n_train, n_val, _ = split_counts(len(shuffled), ratios)
        train.extend(shuffled[:n_train])
        val.extend(shuffled[n_train : n_train + n_val])
        test.extend(shuffled[n_train + n_val :])
    return train, val, test


def parse_ratios(text: str) -> tuple[float, float, float]:
    parts = [part.strip() for part in text.split(":")]
    try:
        values = tuple(float(part) for part in parts)
    except ValueError:
        raise UsageError(f"Invalid split ratios {text!r}.") from None
    if len(values) != 3 or any(value <= 0 for value in values):
        raise UsageError(f"Invalid split ratios {text!r}.")
    return values  # type: ignore[return-value]
