"""Sentence embedding backends.

Real encoding goes through sentence-transformers with the configured
checkpoint. ``mock:trigram[:dim]`` selects a deterministic hashed-trigram
encoder so file plumbing can be exercised without model weights.
"""

from __future__ import annotations

import numpy as np

DEFAULT_ENCODER = "sentence-transformers/all-mpnet-base-v2"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


class ModelUnavailable(RuntimeError):
    """Raised when a real model backend cannot be loaded."""


def _trigram_vector(text: str, dim: int) -> np.ndarray:
    acc = np.zeros(dim)
    for token in text.lower().replace("_", " ").split():
        padded = f"#{token}#"
        for i in range(len(padded) - 2):
            h = _FNV_OFFSET
            for byte in padded[i : i + 3].encode("utf-8"):
                h = ((h ^ byte) * _FNV_PRIME) & _MASK
            sign = 1.0 if ((h // dim) & 1) == 0 else -1.0
            acc[h % dim] += sign
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        acc[0] = 1.0
        return acc
    return acc / norm


def _mock_encode_batch(texts: list[str], model: str) -> np.ndarray:
    parts = model.split(":")
    dim = int(parts[2]) if len(parts) > 2 else 384
    return np.stack([_trigram_vector(t, dim) for t in texts]).astype(np.float32)


def _sbert_encode_batch(texts: list[str], model: str) -> np.ndarray:
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ModelUnavailable(
            f"sentence-transformers is not installed; cannot load {model!r}"
        ) from exc
    try:
        encoder = SentenceTransformer(model)
    except Exception as exc:
        raise ModelUnavailable(f"cannot load encoder {model!r}: {exc}") from exc
    vectors = encoder.encode(
        texts,
        batch_size=64,
        convert_to_numpy=True,
        normalize_embeddings=True,
        show_progress_bar=False,
    )
    return np.asarray(vectors, dtype=np.float32)


def encode_texts(texts: list[str], model: str = DEFAULT_ENCODER) -> np.ndarray:
    """Unit-normalized float32 embeddings, one row per input text."""
    if not texts:
        raise ValueError("no texts to encode")
    if model.startswith("mock:"):
        vectors = _mock_encode_batch(texts, model)
    else:
        vectors = _sbert_encode_batch(texts, model)
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
    norms[norms == 0.0] = 1.0
    return (vectors.astype(np.float64) / norms[:, None]).astype(np.float32)
