import numpy as np
import pytest

from profile_rec.data_access import read_store, write_store
from profile_rec.errors import DataError
from profile_rec.models import EmbeddingStore, EntityKind


def sample_store() -> EmbeddingStore:
    vectors = np.arange(12, dtype=np.float32).reshape(3, 4) / 7
    return EmbeddingStore(EntityKind.item, ("i1", "ítem-2", "i3"), vectors)


def test_store_round_trip(tmp_path) -> None:
    path = tmp_path / "items.ezem"
    store = sample_store()

    write_store(path, store)
    loaded = read_store(path)

    assert loaded.kind is EntityKind.item
    assert loaded.ids == store.ids
    np.testing.assert_array_equal(loaded.vectors, store.vectors)
    assert loaded.row("ítem-2").tolist() == store.vectors[1].tolist()


def test_truncated_store_is_rejected(tmp_path) -> None:
    path = tmp_path / "items.ezem"
    write_store(path, sample_store())
    path.write_bytes(path.read_bytes()[:-3])

    with pytest.raises(DataError) as exc:
        read_store(path)

    assert exc.value.detail == "Truncated file: items.ezem."


def test_trailing_bytes_are_rejected(tmp_path) -> None:
    path = tmp_path / "items.ezem"
    write_store(path, sample_store())
    path.write_bytes(path.read_bytes() + b"\x00")

    with pytest.raises(DataError):
        read_store(path)


def test_foreign_file_is_rejected(tmp_path) -> None:
    path = tmp_path / "users.ezem"
    path.write_bytes(b"EZRC\x01\x00\x00\x00")

    with pytest.raises(DataError) as exc:
        read_store(path)

    assert exc.value.detail == "Not an EZEM embedding store: users.ezem."


def test_invalid_utf8_id_is_rejected(tmp_path) -> None:
    path = tmp_path / "items.ezem"
    write_store(path, sample_store())
    path.write_bytes(path.read_bytes().replace("í".encode(), b"\xff\xad"))

    with pytest.raises(DataError) as exc:
        read_store(path)

    assert exc.value.detail == "items.ezem: invalid UTF-8 in id of row 1."


def test_store_rejects_duplicate_ids() -> None:
    with pytest.raises(DataError):
        EmbeddingStore(EntityKind.user, ("u1", "u1"), np.zeros((2, 3), dtype=np.float32))


def test_unknown_id_lookup() -> None:
    with pytest.raises(DataError) as exc:
        sample_store().row("missing")

    assert exc.value.detail == "Unknown item id 'missing' in embedding store."
