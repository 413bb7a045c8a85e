"""Embedding index construction, cosine-ranked querying, and the QBVE
binary container.

QBVE layout (little-endian), one segment:

    magic   4 bytes  "QBVE"
    version u32      1
    dim     u32      vector length
    count   u32      number of entries
    entry*  u16 id byte-length, UTF-8 id bytes, dim x f32 values

Embedding files are a single segment.  The container is streamable:
checkpoint files (encoder parameters) are a sequence of segments, one per
named array, with the array shape encoded in the id as
"params:<name>|<d0>,<d1>,...".  Values are always float32, so round trips
are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Callable

import numpy as np

from .audio_io import AudioClip
from .exceptions import DegenerateInputError

MAGIC = b"QBVE"
VERSION = 1


@dataclass
class RetrievalResult:
    """Ranked (id, score) pairs, scores non-increasing, ties broken by id."""

    entries: list

    def rank_of(self, target_id: str) -> int:
        """1-based rank of target_id; raises if absent."""
        for i, (rid, _) in enumerate(self.entries):
            if rid == target_id:
                return i + 1
        raise KeyError(f"{target_id!r} not in result")

    def ids(self) -> list:
        return [rid for rid, _ in self.entries]


@dataclass
class EmbeddingIndex:
    ids: list
    matrix: np.ndarray            # [count x dim], unit rows for vector backends
    backend: str = "encoder"

    def __post_init__(self):
        if len(self.ids) != self.matrix.shape[0]:
            raise ValueError("ids and matrix row count differ")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate reference id in index")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def _normalize_rows(matrix: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Unit-normalize rows, leaving already-unit rows bit-identical."""
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInputError("zero-norm embedding row")
    if np.all(np.abs(norms - 1.0) <= tol):
        return matrix
    return (matrix / norms[:, None].astype(matrix.dtype)).astype(matrix.dtype)


def build_index(
    ids: list,
    *,
    clips: list | None = None,
    featurizer: Callable[[AudioClip], np.ndarray] | None = None,
    embeddings: np.ndarray | None = None,
    backend: str = "encoder",
) -> EmbeddingIndex:
    """Build an index either from clips + a featurizer or from precomputed
    embeddings (the import path for externally trained backbones)."""
    if len(ids) == 0:
        raise ValueError("cannot build an empty index")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate reference id")
    if embeddings is None:
        if clips is None or featurizer is None:
            raise ValueError("need clips + featurizer when embeddings are not given")
        embeddings = np.stack([np.asarray(featurizer(c), dtype=np.float64) for c in clips])
    return EmbeddingIndex(ids=list(ids), matrix=_normalize_rows(embeddings), backend=backend)


def query_vector(index: EmbeddingIndex, vector: np.ndarray, k: int) -> RetrievalResult:
    """Exhaustive cosine scan; top-k with deterministic ascending-id tie-break."""
    if len(index.ids) == 0:
        raise ValueError("empty index")
    if not 1 <= k <= len(index.ids):
        raise ValueError(f"k must be in [1, {len(index.ids)}], got {k}")
    vector = np.asarray(vector, dtype=np.float64)
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        raise DegenerateInputError("zero-norm query feature")
    row_norms = np.linalg.norm(index.matrix.astype(np.float64), axis=1)
    scores = (index.matrix.astype(np.float64) @ (vector / norm)) / row_norms
    scores = np.clip(scores, -1.0, 1.0)
    order = sorted(range(len(index.ids)), key=lambda i: (-scores[i], index.ids[i]))
    return RetrievalResult(entries=[(index.ids[i], float(scores[i])) for i in order[:k]])


def query(index: EmbeddingIndex, imitation: AudioClip, k: int,
          featurizer: Callable[[AudioClip], np.ndarray]) -> RetrievalResult:
    return query_vector(index, featurizer(imitation), k)


# --- QBVE container ---------------------------------------------------------

def _write_segment(fh: BinaryIO, ids: list, matrix: np.ndarray) -> None:
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ValueError("matrix must be 2-D")
    if not np.isfinite(matrix).all():
        raise ValueError("matrix must be finite")
    if len(ids) != matrix.shape[0]:
        raise ValueError("ids and matrix row count differ")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate id")
    fh.write(MAGIC)
    fh.write(struct.pack("<III", VERSION, matrix.shape[1], matrix.shape[0]))
    for rid, row in zip(ids, matrix):
        encoded = rid.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ValueError(f"id too long: {rid[:32]!r}...")
        fh.write(struct.pack("<H", len(encoded)))
        fh.write(encoded)
        fh.write(row.tobytes())


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ValueError("truncated QBVE file")
    return data


def _read_segment(fh: BinaryIO):
    magic = _read_exact(fh, 4)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version, dim, count = struct.unpack("<III", _read_exact(fh, 12))
    if version != VERSION:
        raise ValueError(f"unsupported QBVE version {version}")
    ids, rows = [], []
    for _ in range(count):
        (id_len,) = struct.unpack("<H", _read_exact(fh, 2))
        ids.append(_read_exact(fh, id_len).decode("utf-8"))
        rows.append(np.frombuffer(_read_exact(fh, 4 * dim), dtype="<f4"))
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate id in QBVE segment")
    matrix = np.stack(rows) if rows else np.zeros((0, dim), dtype=np.float32)
    return ids, matrix


def write_embeddings(path, ids: list, matrix: np.ndarray) -> None:
    with open(path, "wb") as fh:
        _write_segment(fh, ids, matrix)


def read_embeddings(path):
    """Read one QBVE segment; returns (ids, float32 matrix) bit-exactly."""
    with open(path, "rb") as fh:
        return _read_segment(fh)


def write_named_arrays(path, arrays: dict) -> None:
    """Checkpoint writer: one QBVE segment per named array, the shape
    riding in the id ("params:<name>|<shape>"), values flattened."""
    with open(path, "wb") as fh:
        for name, arr in arrays.items():
            arr = np.asarray(arr)
            shape = ",".join(str(s) for s in arr.shape)
            _write_segment(fh, [f"params:{name}|{shape}"], arr.reshape(1, -1))


def read_named_arrays(path) -> dict:
    out = {}
    with open(path, "rb") as fh:
        while fh.peek(1) if hasattr(fh, "peek") else True:
            probe = fh.read(1)
            if not probe:
                break
            fh.seek(-1, 1)
            ids, matrix = _read_segment(fh)
            if len(ids) != 1 or not ids[0].startswith("params:"):
                raise ValueError("not a parameter checkpoint segment")
            name, _, shape_s = ids[0][len("params:"):].partition("|")
            shape = tuple(int(s) for s in shape_s.split(",")) if shape_s else (matrix.shape[1],)
            if name in out:
                raise ValueError(f"duplicate array {name!r} in checkpoint")
            out[name] = matrix.reshape(shape).astype(np.float64)
    return out
