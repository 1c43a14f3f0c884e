from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from profile_rec.models import (
    Interaction,
    InteractionDataset,
    ProfileSet,
    RawItemRecord,
    SplitName,
    SyntheticSpec,
)
from profile_rec.services.preprocessing import split_interactions

logger = logging.getLogger(__name__)

SPLIT_RATIOS = (8.0, 1.0, 1.0)


def topic_word(topic: int, index: int) -> str:
    return f"t{topic}w{index}"


def item_id_for(topic: int, index: int) -> str:
    return f"item-{topic:03d}-{index:04d}"


def user_id_for(topic: int, index: int) -> str:
    return f"user-{topic:03d}-{index:04d}"


@dataclass(slots=True)
class SyntheticCorpus:
    records: list[RawItemRecord]
    item_profiles: dict[str, ProfileSet]
    user_ids: list[str]
    user_profiles: dict[str, ProfileSet]
    interactions: list[Interaction]
    splits: dict[SplitName, list[Interaction]]
    topics: dict[str, int] = field(default_factory=dict)

    def dataset(self) -> InteractionDataset:
        return InteractionDataset.build(
            self.user_ids,
            [record.item_id for record in self.records],
            train=[interaction.pair for interaction in self.splits[SplitName.train]],
            val=[interaction.pair for interaction in self.splits[SplitName.val]],
            test=[interaction.pair for interaction in self.splits[SplitName.test]],
        )


def _item_weights(spec: SyntheticSpec) -> np.ndarray:
    if spec.popularity == "uniform":
        weights = np.ones(spec.items_per_topic)
    else:
        weights = np.arange(1, spec.items_per_topic + 1, dtype=np.float64) ** -spec.power_law_exponent
    return weights / weights.sum()


def _sample_profile(words: list[str], length: int, rng: np.random.Generator) -> str:
    return " ".join(words[int(index)] for index in rng.integers(len(words), size=length))


def _profile_set(entity_id: str, words: list[str], spec: SyntheticSpec, rng: np.random.Generator) -> ProfileSet:
    """Original profile plus word-resampled rewrites over the same vocabulary."""
    profiles = tuple(_sample_profile(words, spec.profile_length, rng) for _ in range(spec.diversified + 1))
    return ProfileSet(entity_id, profiles)


def _draw_items(
    user_topic: int, spec: SyntheticSpec, weights: np.ndarray, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Distinct (topic, index) items for one user; a noise fraction leaves the home topic."""
    chosen: list[tuple[int, int]] = []
    taken: set[tuple[int, int]] = set()
    capacity = spec.topics * spec.items_per_topic
    while len(chosen) < min(spec.interactions_per_user, capacity):
        topic = user_topic
        if spec.topics > 1 and rng.random() < spec.noise_rate:
            topic = int(rng.integers(spec.topics - 1))
            topic += topic >= user_topic
        free = [index for index in range(spec.items_per_topic) if (topic, index) not in taken]
        if not free:
            if topic == user_topic and len(taken) < capacity:
                # home topic exhausted, fall back to any free item
                free_any = [
                    (other, index)
                    for other in range(spec.topics)
                    for index in range(spec.items_per_topic)
                    if (other, index) not in taken
                ]
                pick = free_any[int(rng.integers(len(free_any)))]
                chosen.append(pick)
                taken.add(pick)
            continue
        probabilities = weights[free] / weights[free].sum()
        index = free[int(rng.choice(len(free), p=probabilities))]
        chosen.append((topic, index))
        taken.add((topic, index))
    return chosen


def generate(spec: SyntheticSpec) -> SyntheticCorpus:
    """Planted-topic corpus: disjoint word pools per topic, same-topic interactions plus noise."""
    rng = np.random.default_rng(spec.seed)
    pools = [[topic_word(topic, index) for index in range(spec.words_per_topic)] for topic in range(spec.topics)]
    weights = _item_weights(spec)

    records: list[RawItemRecord] = []
    item_profiles: dict[str, ProfileSet] = {}
    item_words: dict[tuple[int, int], list[str]] = {}
    topics: dict[str, int] = {}
    core_size = min(spec.item_core_words, spec.words_per_topic)
    for topic in range(spec.topics):
        for index in range(spec.items_per_topic):
            item_id = item_id_for(topic, index)
            core = [pools[topic][int(position)] for position in rng.choice(spec.words_per_topic, core_size, replace=False)]
            item_words[(topic, index)] = core
            records.append(
                RawItemRecord(item_id=item_id, title=" ".join(core[:2]), category=f"topic {topic}")
            )
            item_profiles[item_id] = _profile_set(item_id, core, spec, rng)
            topics[item_id] = topic

    user_ids: list[str] = []
    interactions: list[Interaction] = []
    for topic in range(spec.topics):
        for index in range(spec.users_per_topic):
            user_id = user_id_for(topic, index)
            user_ids.append(user_id)
            topics[user_id] = topic
            for item_topic, item_index in _draw_items(topic, spec, weights, rng):
                interactions.append(Interaction(user_id, item_id_for(item_topic, item_index)))

    train, val, test = split_interactions(interactions, SPLIT_RATIOS, spec.seed)
    history: dict[str, list[str]] = {}
    for interaction in train:
        history.setdefault(interaction.user_id, []).append(interaction.item_id)
    words_by_item = {item_id_for(*key): words for key, words in item_words.items()}

    user_profiles: dict[str, ProfileSet] = {}
    for user_id in user_ids:
        words = [word for item_id in history.get(user_id, []) for word in words_by_item[item_id]]
        if not words:
            words = pools[topics[user_id]]
        user_profiles[user_id] = _profile_set(user_id, words, spec, rng)

    logger.info(
        "Generated %d users, %d items and %d interactions over %d topics",
        len(user_ids),
        len(records),
        len(interactions),
        spec.topics,
    )
    return SyntheticCorpus(
        records=records,
        item_profiles=item_profiles,
        user_ids=user_ids,
        user_profiles=user_profiles,
        interactions=interactions,
        splits={SplitName.train: train, SplitName.val: val, SplitName.test: test},
        topics=topics,
    )
