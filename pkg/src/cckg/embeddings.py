"""Unit-normalized embeddings, batched cosine scoring, EMB1 file format.

All vectors are stored L2-normalized so cosine similarity reduces to a dot
product and scoring a whole triplet table is a single matrix product.
Includes a deterministic lexical mock encoder (hashed character trigrams)
so the engine runs end to end without any ML dependency.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

EMB_MAGIC = b"EMB1"
NORM_TOLERANCE = 1e-4

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


class EmbeddingError(Exception):
    """Raised for malformed embedding files or dimension mismatches."""


@dataclass
class EmbeddingMatrix:
    """Row-per-entity float32 matrix with unit-norm rows.

    ``renormalized`` counts rows whose stored norm deviated by more than
    the tolerance and were re-normalized at load time.
    """

    data: np.ndarray
    renormalized: int = 0

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise EmbeddingError("embedding matrix must be 2-dimensional")

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])


@dataclass
class TripletScores:
    """Cosine similarity of every triplet to premise, conclusion, argument."""

    s_p: np.ndarray
    s_c: np.ndarray
    s_a: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.s_p)
        if len(self.s_c) != n or len(self.s_a) != n:
            raise EmbeddingError("score arrays must have equal length")


# Fixed row-block size keeps float64 accumulation order identical no matter
# how callers batch their requests.
_SCORE_BLOCK = 131072


def _scores_for_queries(matrix: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Blocked float32-storage / float64-accumulation product, one cast pass."""
    q64 = queries.astype(np.float64)
    out = np.empty((matrix.shape[0], q64.shape[1]), dtype=np.float64)
    for start in range(0, matrix.shape[0], _SCORE_BLOCK):
        block = matrix[start : start + _SCORE_BLOCK].astype(np.float64)
        out[start : start + _SCORE_BLOCK] = block @ q64
    return out


def _scores_for_query(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    return _scores_for_queries(matrix, query.reshape(-1, 1))[:, 0]


def cosine_scores(embeddings: EmbeddingMatrix, query: np.ndarray) -> np.ndarray:
    """Dot product of every row with one unit query vector."""
    query = np.asarray(query)
    if query.shape != (embeddings.dim,):
        raise EmbeddingError(
            f"query has shape {query.shape}, expected ({embeddings.dim},)"
        )
    return _scores_for_query(embeddings.data, query)


def score_triplets(
    triplet_embeddings: EmbeddingMatrix,
    query_p: np.ndarray,
    query_c: np.ndarray,
    query_a: np.ndarray,
) -> TripletScores:
    """Per-triplet cosine scores against the three query vectors.

    Inputs are unit vectors, so the scores are plain dot products computed
    as one batched matrix-vector product per query (float64 accumulation).
    """
    matrix = triplet_embeddings.data
    for name, q in (("query_p", query_p), ("query_c", query_c), ("query_a", query_a)):
        q = np.asarray(q)
        if q.shape != (matrix.shape[1],):
            raise EmbeddingError(
                f"{name} has shape {q.shape}, expected ({matrix.shape[1]},)"
            )
    stacked = np.stack(
        [np.asarray(query_p), np.asarray(query_c), np.asarray(query_a)], axis=1
    )
    scores = _scores_for_queries(matrix, stacked)
    return TripletScores(
        s_p=np.ascontiguousarray(scores[:, 0]),
        s_c=np.ascontiguousarray(scores[:, 1]),
        s_a=np.ascontiguousarray(scores[:, 2]),
    )


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


# token -> ((bucket, sign), ...) cache; contributions are dim-dependent.
_token_cache: dict[tuple[str, int], tuple[tuple[int, float], ...]] = {}


def _token_contributions(token: str, dim: int) -> tuple[tuple[int, float], ...]:
    key = (token, dim)
    cached = _token_cache.get(key)
    if cached is not None:
        return cached
    padded = "#" + token + "#"
    contribs = []
    for i in range(len(padded) - 2):
        h = _fnv1a64(padded[i : i + 3].encode("utf-8"))
        bucket = h % dim
        sign = 1.0 if ((h // dim) & 1) == 0 else -1.0
        contribs.append((bucket, sign))
    result = tuple(contribs)
    if len(_token_cache) < 1_000_000:
        _token_cache[key] = result
    return result


def mock_encode(text: str, dim: int = 128) -> np.ndarray:
    """Deterministic lexical unit vector from hashed character trigrams.

    Shared trigrams between texts yield higher cosine, which preserves the
    qualitative behavior of a sentence encoder for tests. Total function:
    texts with no tokens map to the axis-0 unit vector.
    """
    if dim < 16:
        raise EmbeddingError("mock encoder needs dim >= 16")
    acc = np.zeros(dim, dtype=np.float64)
    for token in text.lower().replace("_", " ").split():
        for bucket, sign in _token_contributions(token, dim):
            acc[bucket] += sign
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        vec = np.zeros(dim, dtype=np.float32)
        vec[0] = 1.0
        return vec
    return (acc / norm).astype(np.float32)


def mock_encode_many(texts: list[str], dim: int = 128) -> EmbeddingMatrix:
    data = np.empty((len(texts), dim), dtype=np.float32)
    for i, text in enumerate(texts):
        data[i] = mock_encode(text, dim)
    return EmbeddingMatrix(data)


def save_embeddings(
    matrix: EmbeddingMatrix,
    path: str | Path,
    source: str | None = None,
) -> None:
    """Write the EMB1 binary format plus a sidecar alignment file."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<II", matrix.rows, matrix.dim))
        fh.write(matrix.data.astype("<f4").tobytes())
    sidecar = {"rows": matrix.rows, "dim": matrix.dim, "source": source}
    Path(str(path) + ".src").write_text(
        json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
    )


def read_sidecar(path: str | Path) -> dict | None:
    sidecar = Path(str(path) + ".src")
    if not sidecar.exists():
        return None
    return json.loads(sidecar.read_text(encoding="utf-8"))


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Load an EMB1 file, re-normalizing rows that drifted off unit norm."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != EMB_MAGIC:
            raise EmbeddingError(f"{path}: bad magic {magic!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise EmbeddingError(f"{path}: truncated header")
        rows, dim = struct.unpack("<II", header)
        if rows == 0 or dim == 0:
            raise EmbeddingError(f"{path}: empty embedding matrix")
        payload = fh.read(4 * rows * dim)
        if len(payload) != 4 * rows * dim:
            raise EmbeddingError(f"{path}: truncated payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(rows, dim).copy()
    norms = np.linalg.norm(data.astype(np.float64), axis=1)
    off = np.abs(norms - 1.0) > NORM_TOLERANCE
    renormalized = int(off.sum())
    if renormalized:
        bad = norms[off]
        if np.any(bad == 0.0):
            raise EmbeddingError(f"{path}: zero-norm row cannot be normalized")
        data[off] = (data[off].astype(np.float64) / bad[:, None]).astype(np.float32)
        logger.warning("%s: re-normalized %d rows", path, renormalized)
    return EmbeddingMatrix(data, renormalized=renormalized)
