import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbv.exceptions import DegenerateInputError
from qbv.retrieval import (EmbeddingIndex, build_index, query_vector,
                           read_embeddings, read_named_arrays, write_embeddings,
                           write_named_arrays)


def test_build_index_shapes():
    rng = np.random.default_rng(0)
    emb = rng.standard_normal((3, 128))
    index = build_index(["a", "b", "c"], embeddings=emb)
    assert index.matrix.shape == (3, 128)
    np.testing.assert_allclose(np.linalg.norm(index.matrix.astype(np.float64), axis=1),
                               1.0, atol=1e-6)


def test_build_index_duplicate_id_errors():
    with pytest.raises(ValueError):
        build_index(["a", "a"], embeddings=np.eye(2))


def test_build_index_zero_row_errors():
    with pytest.raises(DegenerateInputError):
        build_index(["a", "b"], embeddings=np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_imported_roundtrip_preserves_bits(tmp_path):
    # unit-norm rows imported from file survive indexing bit-exactly
    rng = np.random.default_rng(6)
    emb = rng.standard_normal((4, 16)).astype(np.float32)
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    path = tmp_path / "imported.qbve"
    write_embeddings(path, list("abcd"), emb)
    ids, matrix = read_embeddings(path)
    index = build_index(ids, embeddings=matrix, backend="imported")
    assert index.matrix.tobytes() == matrix.tobytes()


def test_query_self_retrieval():
    index = build_index(["a", "b", "c"], embeddings=np.eye(3))
    result = query_vector(index, np.array([0.0, 0.0, 1.0]), k=1)
    assert result.entries[0][0] == "c"
    assert abs(result.entries[0][1] - 1.0) < 1e-12


def test_query_full_k_total_ordering():
    rng = np.random.default_rng(1)
    index = build_index(list("abcde"), embeddings=rng.standard_normal((5, 16)))
    result = query_vector(index, rng.standard_normal(16), k=5)
    assert sorted(result.ids()) == list("abcde")
    scores = [s for _, s in result.entries]
    assert scores == sorted(scores, reverse=True)


def test_query_matches_brute_force_oracle():
    # oracle: exhaustively sort all cosine scores
    rng = np.random.default_rng(2)
    for trial in range(50):
        emb = rng.standard_normal((5, 8))
        index = build_index([f"id{i}" for i in range(5)], embeddings=emb)
        q = rng.standard_normal(8)
        result = query_vector(index, q, k=5)

        unit = emb / np.linalg.norm(emb, axis=1, keepdims=True)
        scores = unit @ (q / np.linalg.norm(q))
        oracle = [f"id{i}" for i in
                  sorted(range(5), key=lambda i: (-scores[i], f"id{i}"))]
        assert result.ids() == oracle


def test_query_scale_invariant():
    rng = np.random.default_rng(3)
    index = build_index(list("abcd"), embeddings=rng.standard_normal((4, 6)))
    q = rng.standard_normal(6)
    assert query_vector(index, q, 4).ids() == query_vector(index, 100.0 * q, 4).ids()


def test_query_tie_break_ascending_id():
    emb = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    index = build_index(["z", "a", "m"], embeddings=emb)
    result = query_vector(index, np.array([1.0, 0.0]), k=3)
    assert result.ids() == ["a", "z", "m"]


def test_query_zero_norm_degenerate():
    index = build_index(["a"], embeddings=np.array([[1.0, 0.0]]))
    with pytest.raises(DegenerateInputError):
        query_vector(index, np.zeros(2), k=1)


def test_empty_index_errors():
    with pytest.raises(ValueError):
        build_index([], embeddings=None)
    index = build_index(["a"], embeddings=np.array([[1.0]]))
    with pytest.raises(ValueError):
        query_vector(index, np.array([1.0]), k=2)


# --- QBVE file format --------------------------------------------------------

def test_write_read_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    ids = ["kick", "snare", "água"]
    matrix = rng.standard_normal((3, 7)).astype(np.float32)
    path = tmp_path / "e.qbve"
    write_embeddings(path, ids, matrix)
    got_ids, got = read_embeddings(path)
    assert got_ids == ids
    assert got.tobytes() == matrix.tobytes()


def test_single_entry_byte_layout(tmp_path):
    # hand-laid-out little-endian layout for one id "a", dim 2, values (1, 0)
    path = tmp_path / "one.qbve"
    write_embeddings(path, ["a"], np.array([[1.0, 0.0]], dtype=np.float32))
    want = bytes([0x51, 0x42, 0x56, 0x45,            # "QBVE"
                  0x01, 0x00, 0x00, 0x00,            # version 1
                  0x02, 0x00, 0x00, 0x00,            # dim 2
                  0x01, 0x00, 0x00, 0x00,            # count 1
                  0x01, 0x00,                        # id length 1
                  0x61,                              # "a"
                  0x00, 0x00, 0x80, 0x3F,            # 1.0f
                  0x00, 0x00, 0x00, 0x00])           # 0.0f
    assert path.read_bytes() == want


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.qbve"
    path.write_bytes(b"QBVX" + b"\x00" * 32)
    with pytest.raises(ValueError, match="magic"):
        read_embeddings(path)


def test_version_mismatch_rejected(tmp_path):
    path = tmp_path / "v2.qbve"
    path.write_bytes(b"QBVE" + struct.pack("<III", 2, 1, 0))
    with pytest.raises(ValueError, match="version"):
        read_embeddings(path)


def test_truncated_file_rejected(tmp_path):
    path = tmp_path / "t.qbve"
    write_embeddings(path, ["ab"], np.ones((1, 4), dtype=np.float32))
    data = path.read_bytes()
    path.write_bytes(data[:-3])
    with pytest.raises(ValueError, match="truncated"):
        read_embeddings(path)


def test_duplicate_ids_rejected_on_write(tmp_path):
    with pytest.raises(ValueError):
        write_embeddings(tmp_path / "d.qbve", ["x", "x"], np.ones((2, 2), dtype=np.float32))


def test_nonfinite_rejected_on_write(tmp_path):
    with pytest.raises(ValueError):
        write_embeddings(tmp_path / "n.qbve", ["x"], np.array([[np.inf, 0.0]], dtype=np.float32))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_roundtrip_property(tmp_path_factory, data):
    n = data.draw(st.integers(1, 6))
    dim = data.draw(st.integers(1, 12))
    ids = data.draw(st.lists(st.text(min_size=1, max_size=12), min_size=n, max_size=n,
                             unique=True))
    values = data.draw(st.lists(
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, width=32),
        min_size=n * dim, max_size=n * dim))
    matrix = np.array(values, dtype=np.float32).reshape(n, dim)
    path = tmp_path_factory.mktemp("qbve") / "p.qbve"
    write_embeddings(path, ids, matrix)
    got_ids, got = read_embeddings(path)
    assert got_ids == ids
    assert got.tobytes() == matrix.tobytes()


def test_named_arrays_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    arrays = {"ref/conv1_w": rng.standard_normal((4, 1, 3, 3)),
              "ref/proj_b": rng.standard_normal(16),
              "fnn/w1": rng.standard_normal((8, 32))}
    path = tmp_path / "ckpt.qbve"
    write_named_arrays(path, arrays)
    got = read_named_arrays(path)
    assert set(got) == set(arrays)
    for k in arrays:
        assert got[k].shape == arrays[k].shape
        np.testing.assert_array_equal(got[k], arrays[k].astype(np.float32).astype(np.float64))


def test_index_invariants():
    with pytest.raises(ValueError):
        EmbeddingIndex(ids=["a", "b"], matrix=np.ones((3, 2)))
    with pytest.raises(ValueError):
        EmbeddingIndex(ids=["a", "a"], matrix=np.ones((2, 2)))
