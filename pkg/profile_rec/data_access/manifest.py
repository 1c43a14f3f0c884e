from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

from pydantic import BaseModel

MANIFEST_FILE = "manifest.json"


class FileDigest(BaseModel):
    path: str
    sha256: str


class Manifest(BaseModel):
    config_sha256: str
    files: list[FileDigest]


def canonical_json(document: Mapping[str, Any]) -> bytes:
    return json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(run_dir: Path, config: Mapping[str, Any], files: Iterable[Path]) -> Manifest:
    entries = {
        path.resolve().relative_to(run_dir.resolve()).as_posix(): file_sha256(path)
        for path in files
        if path.name != MANIFEST_FILE
    }
    return Manifest(
        config_sha256=hashlib.sha256(canonical_json(config)).hexdigest(),
        files=[FileDigest(path=name, sha256=entries[name]) for name in sorted(entries)],
    )


def write_manifest(run_dir: Path, config: Mapping[str, Any], files: Iterable[Path]) -> Path:
    manifest = build_manifest(run_dir, config, files)
    target = run_dir / MANIFEST_FILE
    target.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return target
