import pytest

from profile_rec.errors import DataError, UsageError
from profile_rec.models import CLS_ID, PAD_ID, RESERVED_TOKENS, UNK_ID, Vocab
from profile_rec.services.tokenizer import ProfileTokenizer, build_vocab, normalize, tokenize


def test_normalize_splits_words_and_punctuation() -> None:
    assert normalize("Loves Sci-Fi, hates ROMANCE!") == ["loves", "sci", "-", "fi", ",", "hates", "romance", "!"]


def test_build_vocab_orders_by_count_then_token() -> None:
    vocab = build_vocab(["b a a", "c b a", "d"], 10)

    assert vocab.tokens[:4] == RESERVED_TOKENS
    assert vocab.tokens[4:] == ("a", "b", "c", "d")


def test_build_vocab_truncates_to_target_size() -> None:
    vocab = build_vocab(["b a a", "c b a"], 6)

    assert vocab.tokens[4:] == ("a", "b")


def test_build_vocab_from_empty_corpus_holds_reserved_tokens() -> None:
    assert build_vocab([], 10).size == 4


def test_build_vocab_rejects_tiny_target() -> None:
    with pytest.raises(UsageError) as exc:
        build_vocab(["a"], 4)

    assert exc.value.detail == "Vocabulary size must be at least 5."


def test_tokenize_prepends_cls_and_pads() -> None:
    vocab = build_vocab(["red apple"], 10)

    sequence = tokenize("Red pear", vocab, 5)

    assert sequence.ids == (CLS_ID, vocab.id_of("red"), UNK_ID, PAD_ID, PAD_ID)
    assert sequence.attention_mask == (1, 1, 1, 0, 0)
    assert sequence.true_len == 3


def test_tokenize_truncates_to_max_len() -> None:
    vocab = build_vocab(["a b c d e f"], 20)

    sequence = tokenize("a b c d e f", vocab, 4)

    assert sequence.true_len == 4
    assert sequence.ids[0] == CLS_ID
    assert sequence.attention_mask == (1, 1, 1, 1)


def test_vocab_requires_reserved_prefix() -> None:
    with pytest.raises(DataError) as exc:
        Vocab(("a", "b"))

    assert exc.value.detail == "Vocabulary must start with the reserved tokens."


def test_profile_tokenizer_caches_sequences() -> None:
    tokenizer = ProfileTokenizer(build_vocab(["a b"], 10), 8)

    assert tokenizer("a b") is tokenizer("a b")
    assert tokenizer.max_len == 8
