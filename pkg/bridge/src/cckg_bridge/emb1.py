"""EMB1 binary format: magic, u32 rows, u32 dim, little-endian float32 rows.

This mirrors the engine's embedding file contract; the format itself is
the interface between the two packages.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"EMB1"


def write_emb1(data: np.ndarray, path: str | Path, source: str | None = None) -> None:
    data = np.ascontiguousarray(data, dtype=np.float32)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("EMB1 payload must be a non-empty 2-d matrix")
    norms = np.linalg.norm(data.astype(np.float64), axis=1)
    if np.any(norms == 0.0):
        raise ValueError("EMB1 rows must be non-zero before normalization")
    data = (data.astype(np.float64) / norms[:, None]).astype(np.float32)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", data.shape[0], data.shape[1]))
        fh.write(data.astype("<f4").tobytes())
    sidecar = {"rows": int(data.shape[0]), "dim": int(data.shape[1]), "source": source}
    Path(str(path) + ".src").write_text(
        json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
    )


def load_emb1(path: str | Path) -> np.ndarray:
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not an EMB1 file")
        rows, dim = struct.unpack("<II", fh.read(8))
        payload = fh.read(4 * rows * dim)
    if len(payload) != 4 * rows * dim:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, dim).copy()
