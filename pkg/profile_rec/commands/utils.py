from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from profile_rec import logs
from profile_rec.data_access import CorpusStore
from profile_rec.errors import DataError, UsageError
from profile_rec.models import Corpus, LlmClientConfig


def reject_null_updates(updates: Mapping[str, object]) -> None:
    null_fields = [key for key, value in updates.items() if value is None]
    if null_fields:
        raise UsageError(f"Fields cannot be null: {', '.join(sorted(null_fields))}.")


def explicit_flags(args: argparse.Namespace, fields: Mapping[str, str]) -> dict[str, object]:
    """Flags the user actually passed, keyed by config field name.

    Override flags are declared with ``default=argparse.SUPPRESS`` so absent
    flags never reach the namespace.
    """
    given = vars(args)
    updates = {field: given[dest] for dest, field in fields.items() if dest in given}
    reject_null_updates(updates)
    return updates


def validate_model[ModelT: BaseModel](model: type[ModelT], data: Any, *, what: str) -> ModelT:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or what
        raise UsageError(f"Invalid {what}: {location}: {first['msg']}.") from None


def apply_updates[ModelT: BaseModel](base: ModelT, updates: Mapping[str, object], *, what: str) -> ModelT:
    if not updates:
        return base
    return validate_model(type(base), {**base.model_dump(), **updates}, what=what)


def read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"File not found: {path}.") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path.name}:{exc.lineno}: malformed JSON.") from None
    except UnicodeDecodeError:
        raise DataError(f"{path.name}: invalid UTF-8.") from None


def write_json(path: Path, document: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def emit_json(document: Any) -> None:
    sys.stdout.write(json.dumps(document, indent=2, ensure_ascii=False) + "\n")


def load_corpora(roots: Iterable[Path]) -> list[Corpus]:
    corpora = [CorpusStore(root).load() for root in roots]
    if not corpora:
        raise UsageError("At least one --data directory is required.")
    return corpora


def parse_seed(value: str) -> int:
    seed = int(value)
    if seed < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return seed


def add_client_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("LLM client")
    group.add_argument("--llm-config", type=Path, help="JSON LlmClientConfig document")
    group.add_argument("--endpoint", default=argparse.SUPPRESS, help="chat-completion URL (live mode)")
    group.add_argument("--mock-transcript", type=Path, default=argparse.SUPPRESS, help="offline transcript JSONL")
    group.add_argument("--mock-fallback", choices=("error", "echo"), default=argparse.SUPPRESS)
    group.add_argument("--model", default=argparse.SUPPRESS)
    group.add_argument("--token-env", default=argparse.SUPPRESS)
    group.add_argument("--timeout", type=float, default=argparse.SUPPRESS)
    group.add_argument("--max-retries", type=int, default=argparse.SUPPRESS)
    group.add_argument("--temperature", type=float, default=argparse.SUPPRESS)
    group.add_argument("--concurrency", type=int, default=argparse.SUPPRESS)


CLIENT_FLAGS = {
    "endpoint": "endpoint",
    "mock_transcript": "mock_transcript",
    "mock_fallback": "mock_fallback",
    "model": "model",
    "token_env": "token_env",
    "timeout": "timeout",
    "max_retries": "max_retries",
    "temperature": "temperature",
    "concurrency": "concurrency",
}


def client_config(args: argparse.Namespace) -> LlmClientConfig:
    document: dict[str, Any] = read_json(args.llm_config) if args.llm_config else {}
    updates = explicit_flags(args, CLIENT_FLAGS)
    if "endpoint" in updates:
        document.pop("mock_transcript", None)
    if "mock_transcript" in updates:
        document.pop("endpoint", None)
    config = validate_model(LlmClientConfig, {**document, **updates}, what="LLM client config")
    if args.workers is not None and args.workers < config.concurrency:
        config = config.model_copy(update={"concurrency": args.workers})
    return config


def show_progress(args: argparse.Namespace) -> bool:
    return logs.progress_enabled(args.quiet)


def read_topics(path: Path | None) -> dict[str, int] | None:
    if path is None:
        return None
    topics = read_json(path)
    if not isinstance(topics, dict):
        raise DataError(f"{path.name} must map entity ids to topics.")
    return topics
