from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from profile_rec.errors import DataError
from profile_rec.models import EmbeddingStore, EntityKind

MAGIC = b"EZEM"
VERSION = 1
KIND_CODES = {EntityKind.user: 0, EntityKind.item: 1}


def encode_store(store: EmbeddingStore) -> bytes:
    vectors = np.ascontiguousarray(store.vectors, dtype="<f4")
    parts = [MAGIC, struct.pack("<IBII", VERSION, KIND_CODES[store.kind], len(store), store.dim)]
    for entity_id, row in zip(store.ids, vectors):
        id_bytes = entity_id.encode("utf-8")
        parts.append(struct.pack("<H", len(id_bytes)))
        parts.append(id_bytes)
        parts.append(row.tobytes())
    return b"".join(parts)


def decode_store(payload: bytes, source: str = "store") -> EmbeddingStore:
    header = struct.calcsize("<IBII")
    if payload[:4] != MAGIC or len(payload) < 4 + header:
        raise DataError(f"Not an EZEM embedding store: {source}.")
    version, kind_code, count, dim = struct.unpack_from("<IBII", payload, 4)
    if version != VERSION:
        raise DataError(f"Unsupported embedding store version {version} in {source}.")
    kinds = {code: kind for kind, code in KIND_CODES.items()}
    if kind_code not in kinds:
        raise DataError(f"Unknown entity kind {kind_code} in {source}.")
    offset = 4 + header
    ids: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float32)
    row_bytes = 4 * dim
    for row in range(count):
        if offset + 2 > len(payload):
            raise DataError(f"Truncated file: {source}.")
        (id_length,) = struct.unpack_from("<H", payload, offset)
        offset += 2
        end = offset + id_length + row_bytes
        if end > len(payload):
            raise DataError(f"Truncated file: {source}.")
        try:
            ids.append(payload[offset : offset + id_length].decode("utf-8"))
        except UnicodeDecodeError:
            raise DataError(f"{source}: invalid UTF-8 in id of row {row}.") from None
        vectors[row] = np.frombuffer(payload, dtype="<f4", count=dim, offset=offset + id_length)
        offset = end
    if offset != len(payload):
        raise DataError(f"Trailing bytes in embedding store {source}.")
    return EmbeddingStore(kinds[kind_code], tuple(ids), vectors)


def write_store(path: Path, store: EmbeddingStore) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_store(store))


def read_store(path: Path) -> EmbeddingStore:
    try:
        payload = path.read_bytes()
    except FileNotFoundError:
        raise DataError(f"Embedding store not found: {path}.") from None
    return decode_store(payload, path.name)
