"""Greedy noise pruning of extracted subgraphs.

Concepts are visited from least to most contextually relevant and deleted
unless they are anchors or separators (their removal would increase the
number of connected components). Partial pruning applies only a leading
fraction of the full deletion sequence. The PageRank variant re-ranks
after every single deletion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .extract import Cckg

PAGERANK_DAMPING = 0.85
PAGERANK_TOL = 1e-10
PAGERANK_MAX_ITER = 200


class PruneError(Exception):
    """Raised when a ranking does not match the graph it should prune."""


@dataclass
class PruneRanking:
    """Concepts ordered by ascending relevance; scorer names the criterion."""

    entries: list[tuple[str, float]]
    scorer: str

    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]


def _adjacency(cckg: Cckg) -> dict[str, list[tuple[int, str]]]:
    adj: dict[str, list[tuple[int, str]]] = {label: [] for label in cckg.nodes}
    for i, edge in enumerate(cckg.edges):
        adj[edge.head].append((i, edge.tail))
        if edge.tail != edge.head:
            adj[edge.tail].append((i, edge.head))
    return adj


def _component_count(nodes: set[str], adj: dict[str, list[tuple[int, str]]]) -> int:
    seen: set[str] = set()
    count = 0
    for start in nodes:
        if start in seen:
            continue
        count += 1
        stack = [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            for _, v in adj[u]:
                if v in nodes and v not in seen:
                    seen.add(v)
                    stack.append(v)
    return count


def _drop_nodes(cckg: Cckg, doomed: set[str]) -> Cckg:
    edges = []
    index_map: dict[int, int] = {}
    for i, edge in enumerate(cckg.edges):
        if edge.head in doomed or edge.tail in doomed:
            continue
        index_map[i] = len(edges)
        edges.append(edge)
    paths = []
    for p in cckg.paths:
        if p.source in doomed or p.target in doomed:
            continue
        if any(i not in index_map for i in p.edge_indices):
            continue
        paths.append(replace(p, edge_indices=[index_map[i] for i in p.edge_indices]))
    nodes = {label: role for label, role in cckg.nodes.items() if label not in doomed}
    return Cckg(
        nodes=nodes,
        edges=edges,
        paths=paths,
        skipped_pairs=cckg.skipped_pairs,
        truncated_pairs=cckg.truncated_pairs,
        meta=dict(cckg.meta),
    )


def deletion_sequence(cckg: Cckg, ranking: PruneRanking) -> list[str]:
    """Simulate the full greedy pruning pass and return the deletions in order.

    Each step deletes the lowest-ranked concept that is neither an anchor
    nor a separator (its removal must not increase the component count of
    the graph as pruned so far) and repeats until nothing is deletable.
    Iterating to the fixpoint rather than sweeping once is what makes full
    pruning idempotent: a separator whose hanging neighbors get deleted
    later still gets removed itself.
    """
    ranked = ranking.labels()
    if len(ranked) != len(set(ranked)) or set(ranked) != set(cckg.nodes):
        raise PruneError("ranking does not cover exactly the CCKG's concepts")
    anchors = cckg.anchor_labels()
    adj = _adjacency(cckg)
    alive = set(cckg.nodes)
    sequence: list[str] = []
    components = _component_count(alive, adj)
    while True:
        deleted = False
        for label in ranked:
            if label in anchors or label not in alive:
                continue
            trial = alive - {label}
            after = _component_count(trial, adj) if trial else 0
            if after > components:
                continue
            alive = trial
            components = after
            sequence.append(label)
            deleted = True
            break
        if not deleted:
            return sequence


def prune(cckg: Cckg, ranking: PruneRanking, fraction: float = 1.0) -> Cckg:
    """Apply the first ceil(fraction * n) deletions of the full greedy pass."""
    if not 0.0 <= fraction <= 1.0:
        raise PruneError(f"fraction must be in [0, 1], got {fraction}")
    sequence = deletion_sequence(cckg, ranking)
    keep = math.ceil(fraction * len(sequence))
    applied = sequence[:keep]
    pruned = _drop_nodes(cckg, set(applied))
    pruned.meta["pruned_concepts"] = applied
    return pruned


def rank_by_similarity(
    cckg: Cckg,
    argument_embedding: np.ndarray,
    concept_embedder: Callable[[str], np.ndarray],
) -> PruneRanking:
    """Rank concepts by cosine of their surface label to the argument.

    Ascending order (least similar first); ties fall back to the label.
    """
    query = np.asarray(argument_embedding, dtype=np.float64)
    entries = []
    for label in cckg.nodes:
        vec = np.asarray(concept_embedder(label.replace("_", " ")), dtype=np.float64)
        entries.append((label, float(vec @ query)))
    entries.sort(key=lambda item: (item[1], item[0]))
    return PruneRanking(entries=entries, scorer="similarity")


def pagerank(
    nodes: Sequence[str],
    adj: dict[str, list[tuple[int, str]]],
    alive: set[str],
    damping: float = PAGERANK_DAMPING,
) -> dict[str, float]:
    """Power-iteration PageRank on the unweighted multigraph adjacency.

    Parallel edges count toward transition mass; dangling mass is spread
    uniformly. Iterates until the L1 residual drops below 1e-10.
    """
    order = [label for label in nodes if label in alive]
    n = len(order)
    if n == 0:
        return {}
    index = {label: i for i, label in enumerate(order)}
    out_degree = np.zeros(n)
    targets: list[list[int]] = [[] for _ in range(n)]
    for label in order:
        i = index[label]
        for _, v in adj[label]:
            if v in alive:
                targets[i].append(index[v])
                out_degree[i] += 1
    rank = np.full(n, 1.0 / n)
    for _ in range(PAGERANK_MAX_ITER):
        nxt = np.zeros(n)
        dangling = 0.0
        for i in range(n):
            if out_degree[i] == 0:
                dangling += rank[i]
                continue
            share = rank[i] / out_degree[i]
            for j in targets[i]:
                nxt[j] += share
        nxt = (1.0 - damping) / n + damping * (nxt + dangling / n)
        if float(np.abs(nxt - rank).sum()) < PAGERANK_TOL:
            rank = nxt
            break
        rank = nxt
    return {label: float(rank[index[label]]) for label in order}


def rank_by_pagerank(
    cckg: Cckg, damping: float = PAGERANK_DAMPING
) -> PruneRanking:
    """Static PageRank ranking of the current graph, ascending."""
    if not 0.0 < damping < 1.0:
        raise PruneError("damping must lie in (0, 1)")
    adj = _adjacency(cckg)
    scores = pagerank(list(cckg.nodes), adj, set(cckg.nodes), damping)
    entries = sorted(scores.items(), key=lambda item: (item[1], item[0]))
    return PruneRanking(entries=entries, scorer="pagerank")


def pagerank_deletion_sequence(
    cckg: Cckg, damping: float = PAGERANK_DAMPING
) -> list[str]:
    """Deletion order with PageRank recomputed after every deletion.

    Each step removes the lowest-PageRank deletable concept of the current
    graph; the loop ends when no concept is deletable.
    """
    if not 0.0 < damping < 1.0:
        raise PruneError("damping must lie in (0, 1)")
    anchors = cckg.anchor_labels()
    adj = _adjacency(cckg)
    alive = set(cckg.nodes)
    node_order = list(cckg.nodes)
    sequence: list[str] = []
    components = _component_count(alive, adj)
    while True:
        scores = pagerank(node_order, adj, alive, damping)
        deleted = False
        for label, _ in sorted(scores.items(), key=lambda item: (item[1], item[0])):
            if label in anchors:
                continue
            trial = alive - {label}
            after = _component_count(trial, adj) if trial else 0
            if after > components:
                continue
            alive = trial
            components = after
            sequence.append(label)
            deleted = True
            break
        if not deleted:
            return sequence


def prune_by_pagerank(
    cckg: Cckg, fraction: float = 1.0, damping: float = PAGERANK_DAMPING
) -> Cckg:
    """Partial or full pruning driven by incrementally recomputed PageRank."""
    if not 0.0 <= fraction <= 1.0:
        raise PruneError(f"fraction must be in [0, 1], got {fraction}")
    sequence = pagerank_deletion_sequence(cckg, damping)
    keep = math.ceil(fraction * len(sequence))
    applied = sequence[:keep]
    pruned = _drop_nodes(cckg, set(applied))
    pruned.meta["pruned_concepts"] = applied
    return pruned
