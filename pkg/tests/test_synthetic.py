from collections import Counter

import pytest
from pydantic import ValidationError

from profile_rec.models import SplitName, SyntheticSpec
from profile_rec.services.synthetic import generate, item_id_for, topic_word, user_id_for


def spec(**overrides) -> SyntheticSpec:
    values = {
        "topics": 8,
        "users_per_topic": 40,
        "items_per_topic": 20,
        "words_per_topic": 12,
        "interactions_per_user": 10,
        "noise_rate": 0.1,
        "diversified": 3,
        "seed": 0,
    }
    values.update(overrides)
    return SyntheticSpec(**values)


def test_generation_is_seeded() -> None:
    first = generate(spec(topics=3, users_per_topic=5))
    second = generate(spec(topics=3, users_per_topic=5))

    assert first.interactions == second.interactions
    assert first.item_profiles == second.item_profiles
    assert first.user_profiles == second.user_profiles
    assert first.splits == second.splits


def test_sizes_and_ids() -> None:
    corpus = generate(spec(topics=3, users_per_topic=5, items_per_topic=7))

    assert len(corpus.user_ids) == 15
    assert len(corpus.records) == 21
    assert corpus.user_ids[0] == user_id_for(0, 0) == "user-000-0000"
    assert corpus.records[-1].item_id == item_id_for(2, 6) == "item-002-0006"
    assert all(profile_set.diversified_count == 3 for profile_set in corpus.item_profiles.values())
    assert all(profile_set.diversified_count == 3 for profile_set in corpus.user_profiles.values())


def test_noise_fraction_leaves_the_home_topic() -> None:
    corpus = generate(spec())

    cross = sum(
        1 for interaction in corpus.interactions
        if corpus.topics[interaction.user_id] != corpus.topics[interaction.item_id]
    )

    assert abs(cross / len(corpus.interactions) - 0.1) < 0.03


def test_no_noise_keeps_every_interaction_in_topic() -> None:
    corpus = generate(spec(noise_rate=0.0, topics=4))

    assert all(
        corpus.topics[interaction.user_id] == corpus.topics[interaction.item_id]
        for interaction in corpus.interactions
    )


def test_item_profiles_use_their_topic_words() -> None:
    corpus = generate(spec(topics=4))

    for record in corpus.records:
        topic = corpus.topics[record.item_id]
        pool = {topic_word(topic, index) for index in range(12)}
        for profile in corpus.item_profiles[record.item_id].profiles:
            assert set(profile.split()) <= pool


def test_user_profiles_come_from_train_items() -> None:
    corpus = generate(spec(topics=4, noise_rate=0.0))

    for user_id, profile_set in corpus.user_profiles.items():
        topic = corpus.topics[user_id]
        assert all(word.startswith(f"t{topic}w") for word in profile_set.original.split())


def test_interactions_are_distinct_and_split() -> None:
    corpus = generate(spec(topics=3, users_per_topic=6))

    pairs = [interaction.pair for interaction in corpus.interactions]
    assert len(pairs) == len(set(pairs))
    assert Counter(interaction.user_id for interaction in corpus.interactions) == Counter(
        {user_id: 10 for user_id in corpus.user_ids}
    )
    split_total = sum(len(corpus.splits[name]) for name in SplitName)
    assert split_total == len(corpus.interactions)
    dataset = corpus.dataset()
    assert len(dataset.train) == len(corpus.splits[SplitName.train])


def test_power_law_popularity_favours_low_indices() -> None:
    corpus = generate(spec(popularity="power-law", noise_rate=0.0, power_law_exponent=1.5))

    counts = Counter(interaction.item_id for interaction in corpus.interactions)
    head = sum(counts[item_id_for(topic, 0)] for topic in range(8))
    tail = sum(counts[item_id_for(topic, 19)] for topic in range(8))
    assert head > tail


def test_no_noise_needs_room_in_the_home_topic() -> None:
    with pytest.raises(ValidationError):
        spec(noise_rate=0.0, items_per_topic=5, interactions_per_user=6)

    assert spec(noise_rate=0.0, items_per_topic=6, interactions_per_user=6).interactions_per_user == 6
