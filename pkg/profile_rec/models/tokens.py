from __future__ import annotations

from dataclasses import dataclass, field

from profile_rec.errors import DataError

CLS_TOKEN = "[CLS]"
PAD_TOKEN = "[PAD]"
MASK_TOKEN = "[MASK]"
UNK_TOKEN = "[UNK]"
RESERVED_TOKENS = (CLS_TOKEN, PAD_TOKEN, MASK_TOKEN, UNK_TOKEN)

CLS_ID = 0
PAD_ID = 1
MASK_ID = 2
UNK_ID = 3


@dataclass(frozen=True, slots=True)
class Vocab:
    tokens: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.tokens[: len(RESERVED_TOKENS)] != RESERVED_TOKENS:
            raise DataError("Vocabulary must start with the reserved tokens.")
        index = {token: position for position, token in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise DataError("Vocabulary contains duplicate tokens.")
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token_of(self, token_id: int) -> str:
        return self.tokens[token_id]

    def __contains__(self, token: object) -> bool:
        return token in self._index


@dataclass(frozen=True, slots=True)
class TokenSequence:
    ids: tuple[int, ...]
    attention_mask: tuple[int, ...]
    true_len: int

    @property
    def max_len(self) -> int:
        return len(self.ids)


@dataclass(frozen=True, slots=True)
class MaskedSequence:
    sequence: TokenSequence
    label_positions: tuple[int, ...]
    labels: tuple[int, ...]
