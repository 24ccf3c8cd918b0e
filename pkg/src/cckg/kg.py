"""Indexed triplet knowledge graphs: loading, merging, querying, snapshots.

A knowledge graph is an immutable multigraph of (head, relation, tail)
triplets with an undirected adjacency view. Concepts, relations and
triplets get dense integer ids assigned in first-appearance order, so
identical input bytes always produce identical indexes.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

SNAPSHOT_MAGIC = b"CKG1"
SNAPSHOT_VERSION = 1


class KgError(Exception):
    """Raised for malformed KG input files or invalid queries."""


def normalize_label(raw: str) -> str:
    """Normalize a concept label: lowercase, strip, whitespace -> underscore."""
    return "_".join(raw.strip().lower().split())


@dataclass(frozen=True)
class Triplet:
    id: int
    head: int
    relation: int
    tail: int


class KnowledgeGraph:
    """Immutable indexed multigraph of triplets.

    Parallel edges (same endpoints, different relation) are separate
    triplets. Self-loops are kept as loaded and contribute a single
    adjacency entry, so ``degree`` counts incident triplets.
    """

    def __init__(
        self,
        concept_labels: list[str],
        relation_names: list[str],
        heads: np.ndarray,
        relations: np.ndarray,
        tails: np.ndarray,
    ) -> None:
        self.concept_labels = concept_labels
        self.relation_names = relation_names
        self.heads = np.asarray(heads, dtype=np.int32)
        self.relations = np.asarray(relations, dtype=np.int32)
        self.tails = np.asarray(tails, dtype=np.int32)
        self._concept_index = {label: i for i, label in enumerate(concept_labels)}
        self._relation_index = {name: i for i, name in enumerate(relation_names)}
        self._build_adjacency()
        self._fast_adj: tuple[list[int], list[int], list[int]] | None = None

    @property
    def n_concepts(self) -> int:
        return len(self.concept_labels)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    @property
    def n_triplets(self) -> int:
        return int(self.heads.shape[0])

    def _build_adjacency(self) -> None:
        # CSR-style undirected incidence: one entry per (triplet, endpoint),
        # self-loops contribute a single entry.
        n = self.n_concepts
        loops = self.heads == self.tails
        src = np.concatenate([self.heads, self.tails[~loops]])
        nbr = np.concatenate([self.tails, self.heads[~loops]])
        tid = np.arange(self.n_triplets, dtype=np.int32)
        tids = np.concatenate([tid, tid[~loops]])
        order = np.argsort(src, kind="stable")
        src = src[order]
        self._adj_neighbor = np.ascontiguousarray(nbr[order])
        self._adj_triplet = np.ascontiguousarray(tids[order])
        self._adj_indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self._adj_indptr, src + 1, 1)
        np.cumsum(self._adj_indptr, out=self._adj_indptr)

    def fast_adjacency(self) -> tuple[list[int], list[int], list[int]]:
        """Adjacency as plain Python lists (indptr, neighbors, triplet ids).

        Built lazily and cached; path search over large graphs is much
        faster on lists than on numpy scalars.
        """
        if self._fast_adj is None:
            self._fast_adj = (
                self._adj_indptr.tolist(),
                self._adj_neighbor.tolist(),
                self._adj_triplet.tolist(),
            )
        return self._fast_adj

    def edge_order_weights(self, weights: Sequence[float]) -> list[float]:
        """Per-triplet weights re-ordered to match ``fast_adjacency`` entries."""
        return np.asarray(weights, dtype=np.float64)[self._adj_triplet].tolist()

    def degree(self, concept_id: int) -> int:
        """Number of incident triplets (parallel edges counted separately)."""
        if not 0 <= concept_id < self.n_concepts:
            raise KgError(f"invalid concept id {concept_id}")
        return int(self._adj_indptr[concept_id + 1] - self._adj_indptr[concept_id])

    def neighbors(self, concept_id: int) -> Iterator[tuple[int, int]]:
        """Yield (triplet id, neighbor concept id) for incident triplets."""
        if not 0 <= concept_id < self.n_concepts:
            raise KgError(f"invalid concept id {concept_id}")
        lo = self._adj_indptr[concept_id]
        hi = self._adj_indptr[concept_id + 1]
        for k in range(lo, hi):
            yield int(self._adj_triplet[k]), int(self._adj_neighbor[k])

    def concept_id(self, label: str) -> int | None:
        return self._concept_index.get(normalize_label(label))

    def triplet(self, triplet_id: int) -> Triplet:
        if not 0 <= triplet_id < self.n_triplets:
            raise KgError(f"invalid triplet id {triplet_id}")
        return Triplet(
            triplet_id,
            int(self.heads[triplet_id]),
            int(self.relations[triplet_id]),
            int(self.tails[triplet_id]),
        )

    def triplet_labels(self, triplet_id: int) -> tuple[str, str, str]:
        t = self.triplet(triplet_id)
        return (
            self.concept_labels[t.head],
            self.relation_names[t.relation],
            self.concept_labels[t.tail],
        )

    @classmethod
    def from_triples(
        cls,
        triples: Iterable[tuple[str, str, str]],
        exclude_relations: Iterable[str] = (),
    ) -> "KnowledgeGraph":
        """Index an iterable of raw (head, relation, tail) string triples.

        Labels are normalized, excluded relations dropped before any id
        assignment, duplicates deduplicated, ids in first-appearance order.
        """
        excluded = set(exclude_relations)
        concept_ids: dict[str, int] = {}
        relation_ids: dict[str, int] = {}
        seen: set[tuple[int, int, int]] = set()
        heads: list[int] = []
        rels: list[int] = []
        tails: list[int] = []
        for head, relation, tail in triples:
            if relation in excluded:
                continue
            h = concept_ids.setdefault(normalize_label(head), len(concept_ids))
            r = relation_ids.setdefault(relation, len(relation_ids))
            t = concept_ids.setdefault(normalize_label(tail), len(concept_ids))
            key = (h, r, t)
            if key in seen:
                continue
            seen.add(key)
            heads.append(h)
            rels.append(r)
            tails.append(t)
        labels = list(concept_ids)
        names = list(relation_ids)
        return cls(
            labels,
            names,
            np.array(heads, dtype=np.int32),
            np.array(rels, dtype=np.int32),
            np.array(tails, dtype=np.int32),
        )

    # --- snapshot format: magic "CKG1", u16 version, string tables, id arrays ---

    def save_snapshot(self, path: str | Path) -> None:
        path = Path(path)
        with open(path, "wb") as fh:
            fh.write(SNAPSHOT_MAGIC)
            fh.write(struct.pack("<H", SNAPSHOT_VERSION))
            _write_string_table(fh, self.relation_names)
            _write_string_table(fh, self.concept_labels)
            fh.write(struct.pack("<I", self.n_triplets))
            fh.write(self.heads.astype("<i4").tobytes())
            fh.write(self.relations.astype("<i4").tobytes())
            fh.write(self.tails.astype("<i4").tobytes())

    @classmethod
    def load_snapshot(cls, path: str | Path) -> "KnowledgeGraph":
        path = Path(path)
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != SNAPSHOT_MAGIC:
                raise KgError(f"{path}: not a KG snapshot (bad magic {magic!r})")
            (version,) = struct.unpack("<H", _read_exact(fh, 2, path))
            if version != SNAPSHOT_VERSION:
                raise KgError(
                    f"{path}: unsupported snapshot version {version} "
                    f"(expected {SNAPSHOT_VERSION})"
                )
            relations = _read_string_table(fh, path)
            labels = _read_string_table(fh, path)
            (n_triplets,) = struct.unpack("<I", _read_exact(fh, 4, path))
            raw = _read_exact(fh, 3 * 4 * n_triplets, path)
            ids = np.frombuffer(raw, dtype="<i4")
            heads = ids[:n_triplets]
            rels = ids[n_triplets : 2 * n_triplets]
            tails = ids[2 * n_triplets :]
        return cls(labels, relations, heads, rels, tails)


def _write_string_table(fh: io.BufferedWriter, strings: Sequence[str]) -> None:
    blob = "\n".join(strings).encode("utf-8")
    fh.write(struct.pack("<IQ", len(strings), len(blob)))
    fh.write(blob)


def _read_string_table(fh: io.BufferedReader, path: Path) -> list[str]:
    count, size = struct.unpack("<IQ", _read_exact(fh, 12, path))
    blob = _read_exact(fh, size, path)
    if count == 0:
        return []
    strings = blob.decode("utf-8").split("\n")
    if len(strings) != count:
        raise KgError(f"{path}: corrupt string table")
    return strings


def _read_exact(fh, size: int, path: Path) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise KgError(f"{path}: truncated snapshot")
    return data


def iter_tsv_triples(path: str | Path) -> Iterator[tuple[str, str, str]]:
    """Yield raw triples from a head<TAB>relation<TAB>tail TSV file.

    Blank lines are skipped; any other column count is an error with the
    offending line number.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise KgError(
                    f"{path}:{lineno}: expected 3 tab-separated columns, "
                    f"got {len(parts)}"
                )
            yield parts[0], parts[1], parts[2]


def load_kg(
    path: str | Path, exclude_relations: Iterable[str] = ()
) -> KnowledgeGraph:
    """Load and index a triplet TSV file.

    Triplets with excluded relations are dropped first; concepts that end
    up with degree 0 are never registered, so the loaded graph has
    min degree >= 1. Duplicate triplet lines are deduplicated.
    """
    kg = KnowledgeGraph.from_triples(iter_tsv_triples(path), exclude_relations)
    if kg.n_triplets == 0:
        raise KgError(f"{path}: no triplets after loading")
    return kg


def merge_gold_graphs(gold_graph_files: Sequence[str | Path]) -> KnowledgeGraph:
    """Union a list of small gold-graph TSV files into one deduplicated KG."""
    if not gold_graph_files:
        raise KgError("no gold graph files given")

    def _iter_all() -> Iterator[tuple[str, str, str]]:
        for path in gold_graph_files:
            try:
                got_any = False
                for triple in iter_tsv_triples(path):
                    got_any = True
                    yield triple
                if not got_any:
                    raise KgError(f"{path}: empty gold graph")
            except OSError as exc:
                raise KgError(f"{path}: cannot read gold graph ({exc})") from exc

    kg = KnowledgeGraph.from_triples(_iter_all())
    return kg
