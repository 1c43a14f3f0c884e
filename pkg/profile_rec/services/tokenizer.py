from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable

from profile_rec.errors import UsageError
from profile_rec.models import CLS_ID, PAD_ID, RESERVED_TOKENS, TokenSequence, Vocab

_WORD_PATTERN = re.compile(r"\w+|[^\w\s]")


def normalize(text: str) -> list[str]:
    """Lower-case and split into word runs and standalone punctuation marks."""
    return _WORD_PATTERN.findall(text.lower())


def build_vocab(corpus_texts: Iterable[str], target_size: int) -> Vocab:
    if target_size < len(RESERVED_TOKENS) + 1:
        raise UsageError("Vocabulary size must be at least 5.")
    counts: Counter[str] = Counter()
    for text in corpus_texts:
        counts.update(normalize(text))
    ranked = sorted(counts.items(), key=lambda entry: (-entry[1], entry[0]))
    words = [word for word, _ in ranked[: target_size - len(RESERVED_TOKENS)]]
    return Vocab(RESERVED_TOKENS + tuple(words))


def tokenize(text: str, vocab: Vocab, max_len: int) -> TokenSequence:
    if max_len < 2:
        raise UsageError("max_len must be at least 2.")
    ids = [CLS_ID, *(vocab.id_of(word) for word in normalize(text))][:max_len]
    true_len = len(ids)
    padding = max_len - true_len
    return TokenSequence(
        ids=tuple(ids) + (PAD_ID,) * padding,
        attention_mask=(1,) * true_len + (0,) * padding,
        true_len=true_len,
    )


class ProfileTokenizer:
    """Tokenizes profile texts against one vocabulary, caching repeated texts."""

    def __init__(self, vocab: Vocab, max_len: int) -> None:
        self._vocab = vocab
        self._max_len = max_len
        self._cache: dict[str, TokenSequence] = {}

    @property
    def vocab(self) -> Vocab:
        return self._vocab

    @property
    def max_len(self) -> int:
        return self._max_len

    def __call__(self, text: str) -> TokenSequence:
        sequence = self._cache.get(text)
        if sequence is None:
            sequence = tokenize(text, self._vocab, self._max_len)
            self._cache[text] = sequence
        return sequence
