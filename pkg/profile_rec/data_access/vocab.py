from __future__ import annotations

from pathlib import Path

from profile_rec.errors import DataError
from profile_rec.models import Vocab


def write_vocab(path: Path, vocab: Vocab) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{token}\n" for token in vocab.tokens), encoding="utf-8")


def read_vocab(path: Path) -> Vocab:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"Vocabulary file not found: {path}.") from None
    except UnicodeDecodeError:
        raise DataError(f"{path.name}: invalid UTF-8.") from None
    tokens = tuple(text.split("\n")[:-1]) if text.endswith("\n") else tuple(text.split("\n"))
    return Vocab(tokens)
