from pathlib import Path

import pytest

from profile_rec.data_access import CorpusStore
from profile_rec.models import Corpus, EncoderConfig, SyntheticSpec, Vocab
from profile_rec.services.synthetic import SyntheticCorpus, generate
from profile_rec.services.tokenizer import build_vocab


@pytest.fixture(autouse=True, scope="session")
def anyio_backend():
    return "asyncio"


@pytest.fixture
def small_spec() -> SyntheticSpec:
    return SyntheticSpec(
        topics=3,
        users_per_topic=6,
        items_per_topic=8,
        words_per_topic=10,
        interactions_per_user=5,
        diversified=2,
        seed=3,
    )


@pytest.fixture
def synthetic(small_spec) -> SyntheticCorpus:
    return generate(small_spec)


@pytest.fixture
def corpus(synthetic) -> Corpus:
    return Corpus(
        name="synthetic",
        records=tuple(synthetic.records),
        item_profiles=synthetic.item_profiles,
        user_profiles=synthetic.user_profiles,
        dataset=synthetic.dataset(),
    )


@pytest.fixture
def vocab(corpus) -> Vocab:
    texts = [
        profile
        for profiles in (corpus.item_profiles, corpus.user_profiles)
        for profile_set in profiles.values()
        for profile in profile_set.profiles
    ]
    return build_vocab(texts, 1000)


@pytest.fixture
def encoder_config(vocab) -> EncoderConfig:
    return EncoderConfig(layers=2, hidden_size=16, heads=2, vocab_size=vocab.size, max_len=16, dropout=0.0)


@pytest.fixture
def data_dir(tmp_path, synthetic) -> Path:
    store = CorpusStore(tmp_path / "data")
    store.save(
        records=synthetic.records,
        item_profiles=synthetic.item_profiles,
        user_ids=synthetic.user_ids,
        user_profiles=synthetic.user_profiles,
        splits=synthetic.splits,
    )
    return store.root
