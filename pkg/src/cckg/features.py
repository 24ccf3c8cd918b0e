"""Per-argument feature vector: 15 graph features plus 4 text features.

Size (5): concept/triplet counts and per-side anchor counts. Connectivity
(6): greedy-modularity cluster count and modularity with and without edge
weights, density, transitivity. Distance (4): weighted and unweighted
min-cut between premise- and conclusion-concepts, average and maximal
weighted path length. Text (4): premise-conclusion similarity and the
three NLI probabilities.

Clustering and min-cut use the edge affinity (1 + s_A) / 2 (higher means
more similar), unlike the path-search cost (1 - s_A) / 2.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, fields
from heapq import heappop, heappush
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .extract import Cckg, ROLE_BOTH, ROLE_CONCLUSION, ROLE_PREMISE


class FeatureError(Exception):
    """Raised for inconsistent feature inputs."""


@dataclass(frozen=True)
class FeatureVector:
    """The 19 features in their fixed export order."""

    n_concepts: float
    n_triplets: float
    n_p_concepts: float
    n_c_concepts: float
    n_shared: float
    n_clusters_weighted: float
    n_clusters_unweighted: float
    modularity_weighted: float
    modularity_unweighted: float
    density: float
    transitivity: float
    mincut_weighted: float
    mincut_unweighted: float
    avg_weighted_pc_length: float
    max_weighted_pc_length: float
    pc_similarity: float
    nli_entail: float
    nli_neutral: float
    nli_contradict: float

    def values(self) -> list[float]:
        return [float(getattr(self, f.name)) for f in fields(self)]


FEATURE_NAMES: list[str] = [f.name for f in fields(FeatureVector)]


def affinity(s_a: float) -> float:
    """Edge affinity (1 + s_A) / 2 in [0, 1]; higher = more similar."""
    return min(1.0, max(0.0, (1.0 + s_a) / 2.0))


def _p_nodes(cckg: Cckg) -> list[str]:
    return sorted(
        label
        for label, role in cckg.nodes.items()
        if role in (ROLE_PREMISE, ROLE_BOTH)
    )


def _c_nodes(cckg: Cckg) -> list[str]:
    return sorted(
        label
        for label, role in cckg.nodes.items()
        if role in (ROLE_CONCLUSION, ROLE_BOTH)
    )


def size_features(cckg: Cckg) -> tuple[float, float, float, float, float]:
    """Counts of concepts, triplets, P-concepts, C-concepts and shared ones.

    Concepts extracted for both sides count toward premise, conclusion and
    the shared total.
    """
    shared = sum(1 for role in cckg.nodes.values() if role == ROLE_BOTH)
    return (
        float(len(cckg.nodes)),
        float(len(cckg.edges)),
        float(len(_p_nodes(cckg))),
        float(len(_c_nodes(cckg))),
        float(shared),
    )


def _collapsed(
    cckg: Cckg, weighted: bool
) -> tuple[list[str], dict[tuple[int, int], float]]:
    """Simple-graph collapse: parallel edges merged, affinities summed."""
    order = sorted(cckg.nodes)
    index = {label: i for i, label in enumerate(order)}
    merged: dict[tuple[int, int], float] = {}
    for edge in cckg.edges:
        u, v = index[edge.head], index[edge.tail]
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        merged[key] = merged.get(key, 0.0) + (affinity(edge.s_a) if weighted else 1.0)
    return order, merged


def greedy_modularity(
    n: int, edges: Mapping[tuple[int, int], float]
) -> tuple[list[set[int]], float]:
    """Deterministic agglomerative modularity maximization.

    Starts from singletons and repeatedly merges the connected community
    pair with the largest positive modularity gain; ties pick the smallest
    community ids. Community ids are their smallest member node.
    """
    total = sum(edges.values())
    if n == 0:
        return [], 0.0
    if total <= 0.0:
        return [{i} for i in range(n)], 0.0
    members: dict[int, set[int]] = {i: {i} for i in range(n)}
    degree = {i: 0.0 for i in range(n)}
    between: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    internal = {i: 0.0 for i in range(n)}
    for (u, v), w in edges.items():
        degree[u] += w
        degree[v] += w
        between[u][v] = between[u].get(v, 0.0) + w
        between[v][u] = between[v].get(u, 0.0) + w

    def gain(a: int, b: int) -> float:
        return between[a].get(b, 0.0) / total - 2.0 * (
            degree[a] / (2.0 * total)
        ) * (degree[b] / (2.0 * total))

    while True:
        best: tuple[float, int, int] | None = None
        for a in sorted(members):
            for b in sorted(between[a]):
                if b <= a:
                    continue
                g = gain(a, b)
                if best is None or g > best[0]:
                    best = (g, a, b)
        if best is None or best[0] <= 0.0:
            break
        _, a, b = best
        members[a] |= members.pop(b)
        internal[a] += internal.pop(b) + between[a].pop(b)
        degree[a] += degree.pop(b)
        moved = between.pop(b)
        for c, w in moved.items():
            if c == a:
                continue
            between[a][c] = between[a].get(c, 0.0) + w
            del between[c][b]
            between[c][a] = between[c].get(a, 0.0) + w

    q = 0.0
    for cid, nodes in members.items():
        q += internal[cid] / total - (degree[cid] / (2.0 * total)) ** 2
    return [members[cid] for cid in sorted(members)], q


def connectivity_features(
    cckg: Cckg,
) -> tuple[float, float, float, float, float, float]:
    """Cluster counts, modularities, density and transitivity.

    Graphs with fewer than 2 nodes report node-count clusters and zeros for
    the remaining values.
    """
    n = len(cckg.nodes)
    if n < 2:
        return (float(n), float(n), 0.0, 0.0, 0.0, 0.0)
    _, weighted_edges = _collapsed(cckg, weighted=True)
    _, simple_edges = _collapsed(cckg, weighted=False)
    clusters_w, q_w = greedy_modularity(n, weighted_edges)
    clusters_u, q_u = greedy_modularity(n, simple_edges)

    m = len(simple_edges)
    density = 2.0 * m / (n * (n - 1))

    neighbor_sets: dict[int, set[int]] = {}
    for u, v in simple_edges:
        neighbor_sets.setdefault(u, set()).add(v)
        neighbor_sets.setdefault(v, set()).add(u)
    triangles = 0
    triads = 0
    for u, nbrs in neighbor_sets.items():
        deg = len(nbrs)
        triads += deg * (deg - 1) // 2
        for v in nbrs:
            if v > u:
                triangles += len(nbrs & neighbor_sets[v])
    # Each triangle is counted once per edge with u < v sharing a neighbor,
    # i.e. three times in total.
    transitivity = triangles / triads if triads else 0.0

    return (
        float(len(clusters_w)),
        float(len(clusters_u)),
        float(q_w),
        float(q_u),
        float(density),
        float(transitivity),
    )


def _max_flow(
    n: int, capacity: dict[tuple[int, int], float], source: int, sink: int
) -> float:
    """Edmonds-Karp max flow over directed arc capacities."""
    residual: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    for (u, v), c in capacity.items():
        residual[u][v] = residual[u].get(v, 0.0) + c
        residual[v].setdefault(u, 0.0)
    flow = 0.0
    while True:
        parent: dict[int, int] = {source: source}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in sorted(residual[u]):
                if v not in parent and residual[u][v] > 1e-12:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return flow
        bottleneck = float("inf")
        v = sink
        while v != source:
            u = parent[v]
            bottleneck = min(bottleneck, residual[u][v])
            v = u
        v = sink
        while v != source:
            u = parent[v]
            residual[u][v] -= bottleneck
            residual[v][u] += bottleneck
            v = u
        flow += bottleneck


def _min_cut_value(cckg: Cckg, weighted: bool) -> float:
    p_set = set(_p_nodes(cckg))
    c_set = set(_c_nodes(cckg))
    caps = [affinity(e.s_a) if weighted else 1.0 for e in cckg.edges]
    sentinel = sum(caps) + 1.0
    if (p_set & c_set) or not p_set or not c_set:
        return sentinel
    order = sorted(cckg.nodes)
    index: dict[str, int] = {}
    source = 0
    sink = 1
    next_id = 2
    for label in order:
        if label in p_set:
            index[label] = source
        elif label in c_set:
            index[label] = sink
        else:
            index[label] = next_id
            next_id += 1
    capacity: dict[tuple[int, int], float] = {}
    for e, cap in zip(cckg.edges, caps):
        u, v = index[e.head], index[e.tail]
        if u == v:
            continue
        capacity[(u, v)] = capacity.get((u, v), 0.0) + cap
        capacity[(v, u)] = capacity.get((v, u), 0.0) + cap
    return _max_flow(next_id, capacity, source, sink)


def _weighted_distances(cckg: Cckg, source: str) -> dict[str, float]:
    adj: dict[str, list[tuple[float, str]]] = {label: [] for label in cckg.nodes}
    for e in cckg.edges:
        if e.head == e.tail:
            continue
        adj[e.head].append((e.weight, e.tail))
        adj[e.tail].append((e.weight, e.head))
    dist = {source: 0.0}
    heap = [(0.0, source)]
    done: set[str] = set()
    while heap:
        d, u = heappop(heap)
        if u in done:
            continue
        done.add(u)
        for w, v in adj[u]:
            nd = d + w
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                heappush(heap, (nd, v))
    return dist


def distance_features(cckg: Cckg) -> tuple[float, float, float, float]:
    """Min-cuts between the two anchor sides and weighted P-C path lengths.

    Shared anchors make the sides inseparable, so both min-cut features
    take the sentinel value (total capacity + 1). Path lengths aggregate
    over reachable premise-conclusion pairs; with none reachable both
    length features take their sentinel (total weight + 1).
    """
    cut_w = _min_cut_value(cckg, weighted=True)
    cut_u = _min_cut_value(cckg, weighted=False)

    p_nodes = _p_nodes(cckg)
    c_set = set(_c_nodes(cckg))
    lengths: list[float] = []
    for p in p_nodes:
        dist = _weighted_distances(cckg, p)
        lengths.extend(dist[c] for c in sorted(c_set) if c in dist)
    if lengths:
        avg = sum(lengths) / len(lengths)
        longest = max(lengths)
    else:
        sentinel = sum(e.weight for e in cckg.edges) + 1.0
        avg = longest = sentinel
    return (cut_w, cut_u, float(avg), float(longest))


def text_features(
    premise_embedding: np.ndarray,
    conclusion_embedding: np.ndarray,
    nli: Sequence[float],
) -> tuple[float, float, float, float]:
    """Premise-conclusion cosine plus entail/neutral/contradict probabilities."""
    entail, neutral, contradict = (float(x) for x in nli)
    if abs((entail + neutral + contradict) - 1.0) > 1e-4:
        raise FeatureError("NLI probabilities must sum to 1")
    p = np.asarray(premise_embedding, dtype=np.float64)
    c = np.asarray(conclusion_embedding, dtype=np.float64)
    return (float(p @ c), entail, neutral, contradict)


def compute_features(
    cckg: Cckg,
    premise_embedding: np.ndarray,
    conclusion_embedding: np.ndarray,
    nli: Sequence[float],
) -> FeatureVector:
    """Assemble the full 19-entry vector for one argument."""
    size = size_features(cckg)
    conn = connectivity_features(cckg)
    dist = distance_features(cckg)
    text = text_features(premise_embedding, conclusion_embedding, nli)
    return FeatureVector(*size, *conn, *dist, *text)


def export_matrix(
    feature_rows: Sequence[tuple[str, FeatureVector]],
    out_path: str | Path,
    labels: Mapping[str, Mapping[str, object]] | None = None,
) -> int:
    """Write one CSV row per argument id; returns the row count."""
    label_names: list[str] = []
    if labels:
        seen: set[str] = set()
        for row in labels.values():
            seen.update(row)
        label_names = sorted(seen)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", *FEATURE_NAMES, *label_names])
        for arg_id, vector in feature_rows:
            row: list[object] = [arg_id]
            row.extend(repr(v) for v in vector.values())
            if labels:
                instance = labels.get(arg_id, {})
                row.extend(instance.get(name, "") for name in label_names)
            writer.writerow(row)
    return len(feature_rows)
