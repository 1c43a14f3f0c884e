from __future__ import annotations

from collections.abc import Iterable, Iterator
from pathlib import Path

from pydantic import BaseModel, ValidationError

from profile_rec.errors import DataError


def read_lines(path: Path) -> Iterator[tuple[int, str]]:
    """Yield (line number, text) for every non-blank line."""
    try:
        with path.open("rb") as handle:
            for line_number, raw in enumerate(handle, start=1):
                try:
                    line = raw.decode("utf-8").rstrip("\r\n")
                except UnicodeDecodeError:
                    raise DataError(f"{path.name}:{line_number}: invalid UTF-8.") from None
                if line.strip():
                    yield line_number, line
    except FileNotFoundError:
        raise DataError(f"File not found: {path}.") from None


def validate_row[RowT: BaseModel](model: type[RowT], path: Path, line_number: int, line: str) -> RowT:
    try:
        return model.model_validate_json(line)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise DataError(f"{path.name}:{line_number}: malformed line ({first['msg']}).") from None


def read_rows[RowT: BaseModel](path: Path, model: type[RowT], *, missing_ok: bool = False) -> list[RowT]:
    if missing_ok and not path.exists():
        return []
    return [validate_row(model, path, line_number, line) for line_number, line in read_lines(path)]


def write_lines(path: Path, lines: Iterable[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for line in lines:
            handle.write(line)
            handle.write("\n")


def write_rows(path: Path, rows: Iterable[BaseModel]) -> None:
    write_lines(path, (row.model_dump_json() for row in rows))


def append_rows(path: Path, rows: Iterable[BaseModel]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8", newline="\n") as handle:
        for row in rows:
            handle.write(row.model_dump_json())
            handle.write("\n")
        handle.flush()
