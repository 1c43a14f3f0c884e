from __future__ import annotations

import json
import struct
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import torch

from profile_rec.errors import DataError
from profile_rec.models import CFConfig, EncoderConfig
from profile_rec.networks.encoder import TextEncoder
from profile_rec.networks.graph_cf import GraphCF

MAGIC = b"EZRC"
VERSION = 1
DTYPE_F32 = 0

ENCODER_KIND = "encoder"
CF_KIND = "cf"


@dataclass(frozen=True, slots=True)
class Checkpoint:
    config: dict[str, Any]
    tensors: dict[str, np.ndarray]


class _Reader:
    def __init__(self, payload: bytes, source: str) -> None:
        self._payload = payload
        self._offset = 0
        self._source = source

    def take(self, size: int) -> bytes:
        end = self._offset + size
        if end > len(self._payload):
            raise DataError(f"Truncated file: {self._source}.")
        chunk = self._payload[self._offset : end]
        self._offset = end
        return chunk

    def unpack(self, fmt: str) -> tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def exhausted(self) -> bool:
        return self._offset == len(self._payload)


def encode_checkpoint(config: Mapping[str, Any], tensors: Mapping[str, np.ndarray]) -> bytes:
    config_bytes = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(config_bytes)), config_bytes, struct.pack("<I", len(tensors))]
    for name, tensor in tensors.items():
        data = np.ascontiguousarray(tensor, dtype="<f4")
        name_bytes = name.encode("utf-8")
        parts.append(struct.pack("<H", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack(f"<B{data.ndim}I", data.ndim, *data.shape))
        parts.append(struct.pack("<B", DTYPE_F32))
        parts.append(data.tobytes())
    return b"".join(parts)


def decode_checkpoint(payload: bytes, source: str = "checkpoint") -> Checkpoint:
    reader = _Reader(payload, source)
    if reader.take(4) != MAGIC:
        raise DataError(f"Not an EZRC checkpoint: {source}.")
    version, config_length = reader.unpack("<II")
    if version != VERSION:
        raise DataError(f"Unsupported checkpoint version {version} in {source}.")
    try:
        config = json.loads(reader.take(config_length).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise DataError(f"Malformed checkpoint config in {source}.") from None
    (count,) = reader.unpack("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_length,) = reader.unpack("<H")
        try:
            name = reader.take(name_length).decode("utf-8")
        except UnicodeDecodeError:
            raise DataError(f"{source}: invalid UTF-8 in tensor name.") from None
        (rank,) = reader.unpack("<B")
        shape = reader.unpack(f"<{rank}I")
        (dtype,) = reader.unpack("<B")
        if dtype != DTYPE_F32:
            raise DataError(f"Unsupported tensor dtype {dtype} for {name!r} in {source}.")
        size = int(np.prod(shape, dtype=np.int64))
        tensors[name] = np.frombuffer(reader.take(4 * size), dtype="<f4").reshape(shape).copy()
    if not reader.exhausted:
        raise DataError(f"Trailing bytes in checkpoint {source}.")
    return Checkpoint(config, tensors)


def write_checkpoint(path: Path, config: Mapping[str, Any], tensors: Mapping[str, np.ndarray]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(config, tensors))


def read_checkpoint(path: Path) -> Checkpoint:
    try:
        payload = path.read_bytes()
    except FileNotFoundError:
        raise DataError(f"Checkpoint not found: {path}.") from None
    return decode_checkpoint(payload, path.name)


def _module_tensors(module: torch.nn.Module) -> dict[str, np.ndarray]:
    # float64 training runs are stored as float32
    return {
        name: tensor.detach().to(torch.float32).cpu().numpy()
        for name, tensor in module.state_dict().items()
    }


def _load_tensors(module: torch.nn.Module, tensors: Mapping[str, np.ndarray], source: str) -> None:
    expected = module.state_dict()
    if set(expected) != set(tensors):
        missing = sorted(set(expected) ^ set(tensors))
        raise DataError(f"Checkpoint {source} does not match the model (tensor {missing[0]!r}).")
    state = {}
    for name, reference in expected.items():
        if tuple(reference.shape) != tensors[name].shape:
            raise DataError(f"Checkpoint {source} has shape {tensors[name].shape} for {name!r}.")
        state[name] = torch.from_numpy(tensors[name]).to(reference.dtype)
    module.load_state_dict(state)


def save_encoder(path: Path, encoder: TextEncoder, **metadata: Any) -> None:
    config = {"kind": ENCODER_KIND, "encoder": encoder.config.model_dump(mode="json"), **metadata}
    write_checkpoint(path, config, _module_tensors(encoder))


def load_encoder(path: Path, *, dtype: torch.dtype = torch.float32) -> TextEncoder:
    checkpoint = read_checkpoint(path)
    if checkpoint.config.get("kind") != ENCODER_KIND:
        raise DataError(f"{path.name} is not an encoder checkpoint.")
    encoder = TextEncoder(EncoderConfig.model_validate(checkpoint.config["encoder"])).to(dtype)
    _load_tensors(encoder, checkpoint.tensors, path.name)
    encoder.eval()
    return encoder


def save_cf(path: Path, model: GraphCF, user_ids: Sequence[str], item_ids: Sequence[str]) -> None:
    config = {
        "kind": CF_KIND,
        "cf": model.config.model_dump(mode="json"),
        "text_dim": model.text_projection.in_features if model.text_projection is not None else None,
        "users": list(user_ids),
        "items": list(item_ids),
    }
    write_checkpoint(path, config, _module_tensors(model))


def load_cf(path: Path) -> tuple[GraphCF, list[str], list[str]]:
    checkpoint = read_checkpoint(path)
    if checkpoint.config.get("kind") != CF_KIND:
        raise DataError(f"{path.name} is not a CF checkpoint.")
    users, items = checkpoint.config["users"], checkpoint.config["items"]
    model = GraphCF(
        len(users), len(items), CFConfig.model_validate(checkpoint.config["cf"]), checkpoint.config["text_dim"]
    )
    _load_tensors(model, checkpoint.tensors, path.name)
    return model, users, items
