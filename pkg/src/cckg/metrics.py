"""Scoring predicted subgraphs against gold explanation graphs.

Covers precision/recall/F1 over concepts and triplets, normalized graph
edit distance (exact branch-and-bound with a greedy fallback past the
timeout) and an alignment-based similarity over verbalized triplets
computed from the optimal one-to-one assignment.
"""

from __future__ import annotations

import csv
import json
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .embeddings import mock_encode
from .extract import Cckg
from .kg import iter_tsv_triples, normalize_label
from .verbalize import TemplateSet, verbalize_labels

GED_TIMEOUT = 10.0
EXACT_GED_MAX_NODES = 10


class MetricsError(Exception):
    """Raised for corpus mismatches or unusable inputs."""


@dataclass(frozen=True)
class InstanceGraph:
    """Lightweight directed multigraph for evaluation: labels and triples."""

    nodes: frozenset[str]
    triples: frozenset[tuple[str, str, str]]

    @classmethod
    def from_triples(cls, triples: Iterable[tuple[str, str, str]]) -> "InstanceGraph":
        cleaned = {
            (normalize_label(h), r.strip(), normalize_label(t)) for h, r, t in triples
        }
        nodes = {h for h, _, _ in cleaned} | {t for _, _, t in cleaned}
        return cls(nodes=frozenset(nodes), triples=frozenset(cleaned))

    @classmethod
    def from_tsv(cls, path: str | Path) -> "InstanceGraph":
        return cls.from_triples(iter_tsv_triples(path))

    @classmethod
    def from_cckg(cls, cckg: Cckg) -> "InstanceGraph":
        graph = cls.from_triples(
            (e.head, e.relation, e.tail) for e in cckg.edges
        )
        # Zero-edge subgraphs still carry their anchor nodes.
        return cls(
            nodes=graph.nodes | frozenset(normalize_label(n) for n in cckg.nodes),
            triples=graph.triples,
        )

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.triples)


@dataclass
class GraphScore:
    c_p: float
    c_r: float
    c_f1: float
    t_p: float
    t_r: float
    t_f1: float
    ged_norm: float
    gbs: float
    ged_exact: bool = True


def _prf(match: int, n_pred: int, n_gold: int) -> tuple[float, float, float]:
    if n_pred == 0 and n_gold == 0:
        return 1.0, 1.0, 1.0
    p = match / n_pred if n_pred else 0.0
    r = match / n_gold if n_gold else 0.0
    f1 = 2.0 * p * r / (p + r) if (p + r) > 0.0 else 0.0
    return p, r, f1


def concept_triplet_prf(
    pred: InstanceGraph, gold: InstanceGraph
) -> tuple[float, float, float, float, float, float]:
    """Concept and triplet precision/recall/F1.

    Concepts match on normalized labels, triplets on exact direction-
    sensitive (head, relation, tail) equality.
    """
    c = _prf(len(pred.nodes & gold.nodes), pred.n_nodes, gold.n_nodes)
    t = _prf(len(pred.triples & gold.triples), pred.n_edges, gold.n_edges)
    return (*c, *t)


# --- graph edit distance ------------------------------------------------------


def _relation_map(graph: InstanceGraph) -> dict[tuple[str, str], frozenset[str]]:
    rel: dict[tuple[str, str], set[str]] = {}
    for h, r, t in graph.triples:
        rel.setdefault((h, t), set()).add(r)
    return {k: frozenset(v) for k, v in rel.items()}


def _edge_edit(r1: frozenset[str], r2: frozenset[str]) -> int:
    return max(len(r1), len(r2)) - len(r1 & r2)


class _GedSearch:
    def __init__(self, pred: InstanceGraph, gold: InstanceGraph, deadline: float | None):
        self.nodes1 = sorted(pred.nodes)
        self.nodes2 = sorted(gold.nodes)
        self.rel1 = _relation_map(pred)
        self.rel2 = _relation_map(gold)
        self.deadline = deadline
        self.timed_out = False
        # Edge mass incident to each node's "not yet fixed" frontier, for bounds.
        self.e1_total = sum(len(r) for r in self.rel1.values())
        self.e2_total = sum(len(r) for r in self.rel2.values())

    def _pair_cost(self, u: str, v: str, mapped: dict[str, str | None]) -> int:
        # Edge edits between u (image v) and all previously mapped nodes.
        cost = 0
        for w, img in mapped.items():
            for a, b, x, y in ((u, w, v, img), (w, u, img, v)):
                r1 = self.rel1.get((a, b), frozenset())
                if img is None:
                    cost += len(r1)
                    continue
                r2 = self.rel2.get((x, y), frozenset())
                if r1 or r2:
                    cost += _edge_edit(r1, r2)
        r1 = self.rel1.get((u, u), frozenset())
        r2 = self.rel2.get((v, v), frozenset()) if v is not None else frozenset()
        if v is None:
            cost += len(r1)
        elif r1 or r2:
            cost += _edge_edit(r1, r2)
        return cost

    def _completion(self, mapped: dict[str, str | None]) -> int:
        used = {img for img in mapped.values() if img is not None}
        unused = [v for v in self.nodes2 if v not in used]
        cost = len(unused)
        unused_set = set(unused)
        for (x, y), rels in self.rel2.items():
            if x in unused_set or y in unused_set:
                cost += len(rels)
        return cost

    def _lower_bound(self, i: int, mapped: dict[str, str | None]) -> int:
        rem1 = self.nodes1[i:]
        used = {img for img in mapped.values() if img is not None}
        rem2 = [v for v in self.nodes2 if v not in used]
        c1, c2 = Counter(rem1), Counter(rem2)
        matched = sum((c1 & c2).values())
        lb_nodes = max(len(rem1), len(rem2)) - matched
        rem1_set, rem2_set = set(rem1), set(rem2)
        e1 = sum(
            len(r)
            for (a, b), r in self.rel1.items()
            if a in rem1_set or b in rem1_set
        )
        e2 = sum(
            len(r)
            for (x, y), r in self.rel2.items()
            if x in rem2_set or y in rem2_set
        )
        return lb_nodes + abs(e1 - e2)

    def greedy(self) -> int:
        mapped: dict[str, str | None] = {}
        used: set[str] = set()
        total = 0
        for u in self.nodes1:
            best_img: str | None = None
            best_cost = 1 + self._pair_cost(u, None, mapped)
            for v in self.nodes2:
                if v in used:
                    continue
                cost = (0 if u == v else 1) + self._pair_cost(u, v, mapped)
                if cost < best_cost:
                    best_cost = cost
                    best_img = v
            total += best_cost
            mapped[u] = best_img
            if best_img is not None:
                used.add(best_img)
        return total + self._completion(mapped)

    def solve(self) -> tuple[int, bool]:
        best = self.greedy()
        mapped: dict[str, str | None] = {}
        used: set[str] = set()

        def expand(i: int, cost: int) -> None:
            nonlocal best
            if self.deadline is not None and time.monotonic() > self.deadline:
                self.timed_out = True
                return
            if cost + self._lower_bound(i, mapped) >= best:
                return
            if i == len(self.nodes1):
                total = cost + self._completion(mapped)
                if total < best:
                    best = total
                return
            u = self.nodes1[i]
            candidates: list[str | None] = [
                v for v in self.nodes2 if v not in used
            ]
            candidates.append(None)
            # Cheap-first ordering tightens the bound early.
            candidates.sort(
                key=lambda v: (0 if v == u else 1) if v is not None else 1
            )
            for v in candidates:
                if v is None:
                    step = 1 + self._pair_cost(u, None, mapped)
                else:
                    step = (0 if u == v else 1) + self._pair_cost(u, v, mapped)
                mapped[u] = v
                if v is not None:
                    used.add(v)
                expand(i + 1, cost + step)
                del mapped[u]
                if v is not None:
                    used.discard(v)
                if self.timed_out:
                    return

        expand(0, 0)
        return best, not self.timed_out


def graph_edit_distance(
    pred: InstanceGraph, gold: InstanceGraph, timeout: float = GED_TIMEOUT
) -> tuple[int, bool]:
    """Raw unit-cost edit distance and whether it is exact.

    Graphs with at most 10 nodes each are always solved exactly; larger
    ones fall back to the greedy upper bound once the timeout elapses.
    """
    small = max(len(pred.nodes), len(gold.nodes)) <= EXACT_GED_MAX_NODES
    deadline = None if small else time.monotonic() + timeout
    search = _GedSearch(pred, gold, deadline)
    return search.solve()


def ged_normalized(
    pred: InstanceGraph, gold: InstanceGraph, timeout: float = GED_TIMEOUT
) -> float:
    """Edit distance normalized by (|V1| + |E1| + |V2| + |E2|), in [0, 1]."""
    raw, _ = graph_edit_distance(pred, gold, timeout)
    denom = pred.n_nodes + pred.n_edges + gold.n_nodes + gold.n_edges
    if denom == 0:
        return 0.0
    return min(1.0, max(0.0, raw / denom))


# --- alignment similarity over verbalized triplets ----------------------------


def default_sentence_similarity(a: str, b: str) -> float:
    """Mock-encoder cosine rescaled to [0, 1]."""
    cos = float(np.dot(mock_encode(a), mock_encode(b)))
    return min(1.0, max(0.0, (cos + 1.0) / 2.0))


def graph_bertscore(
    pred: InstanceGraph,
    gold: InstanceGraph,
    sentence_similarity: Callable[[str, str], float],
    templates: TemplateSet,
) -> float:
    """Harmonic mean of alignment precision and recall over verbalized triplets.

    The |pred| x |gold| similarity matrix is matched with an optimal
    one-to-one assignment; precision divides the matched mass by |pred|,
    recall by |gold|. Either graph empty scores 0.
    """
    if pred.n_edges == 0 or gold.n_edges == 0:
        return 0.0
    pred_sents = [
        verbalize_labels(h, r, t, templates) for h, r, t in sorted(pred.triples)
    ]
    gold_sents = [
        verbalize_labels(h, r, t, templates) for h, r, t in sorted(gold.triples)
    ]
    matrix = np.array(
        [[sentence_similarity(p, g) for g in gold_sents] for p in pred_sents]
    )
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    total = float(matrix[rows, cols].sum())
    precision = total / len(pred_sents)
    recall = total / len(gold_sents)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score_graphs(
    pred: InstanceGraph,
    gold: InstanceGraph,
    templates: TemplateSet,
    sentence_similarity: Callable[[str, str], float] | None = None,
    ged_timeout: float = GED_TIMEOUT,
) -> GraphScore:
    sim = sentence_similarity or default_sentence_similarity
    c_p, c_r, c_f1, t_p, t_r, t_f1 = concept_triplet_prf(pred, gold)
    raw, exact = graph_edit_distance(pred, gold, ged_timeout)
    denom = pred.n_nodes + pred.n_edges + gold.n_nodes + gold.n_edges
    ged = min(1.0, raw / denom) if denom else 0.0
    gbs = graph_bertscore(pred, gold, sim, templates)
    return GraphScore(c_p, c_r, c_f1, t_p, t_r, t_f1, ged, gbs, ged_exact=exact)


# --- corpus evaluation ---------------------------------------------------------


@dataclass
class CorpusReport:
    instance_ids: list[str]
    scores: dict[str, GraphScore]
    pred_sizes: dict[str, tuple[int, int]]

    def macro(self) -> dict[str, float]:
        n = len(self.instance_ids)
        agg = {
            "n_nodes": 0.0,
            "n_edges": 0.0,
            "c_p": 0.0,
            "c_r": 0.0,
            "c_f1": 0.0,
            "t_p": 0.0,
            "t_r": 0.0,
            "t_f1": 0.0,
            "ged": 0.0,
            "gbs": 0.0,
        }
        for iid in self.instance_ids:
            s = self.scores[iid]
            nodes, edges = self.pred_sizes[iid]
            agg["n_nodes"] += nodes
            agg["n_edges"] += edges
            agg["c_p"] += s.c_p
            agg["c_r"] += s.c_r
            agg["c_f1"] += s.c_f1
            agg["t_p"] += s.t_p
            agg["t_r"] += s.t_r
            agg["t_f1"] += s.t_f1
            agg["ged"] += s.ged_norm
            agg["gbs"] += s.gbs
        return {key: value / n for key, value in agg.items()}

    def render_table(self) -> str:
        macro = self.macro()
        header = (
            "#nodes",
            "#edges",
            "C P",
            "C R",
            "C F1",
            "T P",
            "T R",
            "T F1",
            "GED",
            "G-BS",
        )
        values = (
            f"{macro['n_nodes']:.1f}",
            f"{macro['n_edges']:.1f}",
            f"{100 * macro['c_p']:.2f}",
            f"{100 * macro['c_r']:.2f}",
            f"{100 * macro['c_f1']:.2f}",
            f"{100 * macro['t_p']:.2f}",
            f"{100 * macro['t_r']:.2f}",
            f"{100 * macro['t_f1']:.2f}",
            f"{macro['ged']:.4f}",
            f"{100 * macro['gbs']:.2f}",
        )
        widths = [max(len(h), len(v)) for h, v in zip(header, values)]
        line1 = "  ".join(h.rjust(w) for h, w in zip(header, widths))
        line2 = "  ".join(v.rjust(w) for v, w in zip(values, widths))
        return (
            f"macro-averages over {len(self.instance_ids)} instances\n"
            f"{line1}\n{line2}\n"
        )

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "id",
                    "n_nodes",
                    "n_edges",
                    "c_p",
                    "c_r",
                    "c_f1",
                    "t_p",
                    "t_r",
                    "t_f1",
                    "ged",
                    "gbs",
                    "ged_exact",
                ]
            )
            for iid in self.instance_ids:
                s = self.scores[iid]
                nodes, edges = self.pred_sizes[iid]
                writer.writerow(
                    [
                        iid,
                        nodes,
                        edges,
                        repr(s.c_p),
                        repr(s.c_r),
                        repr(s.c_f1),
                        repr(s.t_p),
                        repr(s.t_r),
                        repr(s.t_f1),
                        repr(s.ged_norm),
                        repr(s.gbs),
                        int(s.ged_exact),
                    ]
                )


def _instance_graphs(directory: Path) -> dict[str, Path]:
    out: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix in (".tsv", ".json") and path.is_file():
            out[path.stem.removesuffix(".cckg")] = path
    return out


def _load_instance(path: Path) -> InstanceGraph:
    if path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        return InstanceGraph.from_cckg(Cckg.from_json_dict(data))
    try:
        return InstanceGraph.from_tsv(path)
    except OSError as exc:
        raise MetricsError(f"{path}: cannot read graph ({exc})") from exc


def evaluate_corpus(
    pred_dir: str | Path,
    gold_dir: str | Path,
    templates: TemplateSet,
    sentence_similarity: Callable[[str, str], float] | None = None,
    ged_timeout: float = GED_TIMEOUT,
) -> CorpusReport:
    """Score every matching instance id in both directories, macro-averaged."""
    pred_files = _instance_graphs(Path(pred_dir))
    gold_files = _instance_graphs(Path(gold_dir))
    only_pred = sorted(set(pred_files) - set(gold_files))
    only_gold = sorted(set(gold_files) - set(pred_files))
    if only_pred or only_gold:
        raise MetricsError(
            f"instance id mismatch: only in pred {only_pred}, only in gold {only_gold}"
        )
    if not pred_files:
        raise MetricsError("no instances found")
    scores: dict[str, GraphScore] = {}
    sizes: dict[str, tuple[int, int]] = {}
    for iid in sorted(pred_files):
        pred = _load_instance(pred_files[iid])
        gold = _load_instance(gold_files[iid])
        scores[iid] = score_graphs(
            pred, gold, templates, sentence_similarity, ged_timeout
        )
        sizes[iid] = (pred.n_nodes, pred.n_edges)
    return CorpusReport(
        instance_ids=sorted(pred_files), scores=scores, pred_sizes=sizes
    )
