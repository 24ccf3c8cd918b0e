"""Contextualized subgraph extraction.

Anchors are the endpoint concepts of the triplets most similar to the
premise and conclusion. Anchor pairs are connected with weighted shortest
paths (edge cost (1 - s_A) / 2, search undirected), and the union of the
paths is the extracted subgraph. Uncontextualized baselines replace the
similarity weights with unit weights and keep either one random shortest
path per pair or all of them.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Iterable, Sequence

import numpy as np

from .embeddings import TripletScores
from .kg import KnowledgeGraph

logger = logging.getLogger(__name__)

ROLE_PREMISE = "premise"
ROLE_CONCLUSION = "conclusion"
ROLE_BOTH = "both"
ROLE_INTERMEDIATE = "intermediate"

NODE_COLORS = {
    ROLE_PREMISE: "#9370db",
    ROLE_CONCLUSION: "#ffa500",
    ROLE_BOTH: "#ff69b4",
    ROLE_INTERMEDIATE: "#87ceeb",
}


class ExtractError(Exception):
    """Raised for contract violations during extraction."""


def edge_weight(s_a: float) -> float:
    """Path-search cost of a triplet: (1 - s_A) / 2, clipped to [0, 1].

    Clipping absorbs float slack from encoders whose cosines land a hair
    outside [-1, 1]; genuinely negative weights are rejected in the search.
    """
    return min(1.0, max(0.0, (1.0 - s_a) / 2.0))


@dataclass(frozen=True)
class ConstituentScores:
    """Similarity of every triplet to one non-leaf constituent span."""

    text: str
    side: str  # "premise" or "conclusion"
    scores: np.ndarray


@dataclass
class Anchors:
    """Anchor concepts and the selected triplets they came from."""

    p_concepts: set[int]
    c_concepts: set[int]
    p_triplets: list[int]
    c_triplets: list[int]
    provenance: dict[str, list[int]] = field(default_factory=dict)

    @property
    def terminals(self) -> list[int]:
        return sorted(self.p_concepts | self.c_concepts)

    def role_of(self, concept_id: int) -> str:
        in_p = concept_id in self.p_concepts
        in_c = concept_id in self.c_concepts
        if in_p and in_c:
            return ROLE_BOTH
        if in_p:
            return ROLE_PREMISE
        if in_c:
            return ROLE_CONCLUSION
        return ROLE_INTERMEDIATE


def _top_m(scores: np.ndarray, m: int) -> list[int]:
    # Highest score first, ties broken by lower triplet id. The threshold
    # pass keeps selection O(n) while still breaking boundary ties exactly.
    s = np.asarray(scores, dtype=np.float64)
    n = len(s)
    if m >= n:
        return sorted(range(n), key=lambda i: (-s[i], i))
    threshold = np.partition(s, n - m)[n - m]
    candidates = np.nonzero(s >= threshold)[0].tolist()
    candidates.sort(key=lambda i: (-s[i], i))
    return [int(i) for i in candidates[:m]]


def select_anchors(
    kg: KnowledgeGraph,
    scores: TripletScores,
    m: int,
    constituents: Sequence[ConstituentScores] | None = None,
) -> Anchors:
    """Pick anchor concepts from the top-m triplets per side.

    Without constituents the premise side takes the m triplets with highest
    s_P and the conclusion side the m highest by s_C (up to 4m concepts
    from up to 2m triplets). With constituents each span contributes its
    own top-m triplets to its side; leaf spans are excluded upstream.
    """
    if m < 1:
        raise ExtractError("m must be >= 1")
    if len(scores.s_p) != kg.n_triplets:
        raise ExtractError(
            f"scores cover {len(scores.s_p)} triplets, KG has {kg.n_triplets}"
        )
    if m > kg.n_triplets:
        logger.warning("m=%d exceeds triplet count %d; taking all", m, kg.n_triplets)

    provenance: dict[str, list[int]] = {}
    if constituents:
        p_selected: list[int] = []
        c_selected: list[int] = []
        for span in constituents:
            if span.side not in (ROLE_PREMISE, ROLE_CONCLUSION):
                raise ExtractError(f"unknown constituent side {span.side!r}")
            if len(span.scores) != kg.n_triplets:
                raise ExtractError("constituent scores not aligned to KG")
            chosen = _top_m(span.scores, m)
            provenance[span.text] = chosen
            if span.side == ROLE_PREMISE:
                p_selected.extend(chosen)
            else:
                c_selected.extend(chosen)
        p_triplets = sorted(set(p_selected))
        c_triplets = sorted(set(c_selected))
    else:
        p_triplets = _top_m(scores.s_p, m)
        c_triplets = _top_m(scores.s_c, m)

    def endpoints(tids: Iterable[int]) -> set[int]:
        out: set[int] = set()
        for tid in tids:
            t = kg.triplet(tid)
            out.add(t.head)
            out.add(t.tail)
        return out

    return Anchors(
        p_concepts=endpoints(p_triplets),
        c_concepts=endpoints(c_triplets),
        p_triplets=list(p_triplets),
        c_triplets=list(c_triplets),
        provenance=provenance,
    )


# --- weighted shortest paths -------------------------------------------------
#
# The search key is (cost, triplet-id sequence), so equal-cost ties resolve
# to the lexicographically smallest triplet-id sequence read from the
# smaller-id endpoint of the pair. A proper prefix sorts before its
# extensions, which keeps the composite key monotone along a path and makes
# plain Dijkstra settling exact, zero-weight edges included.


def _check_weights(weights: Sequence[float]) -> None:
    for w in weights:
        if w < 0.0:
            raise ExtractError(f"negative edge weight {w}")


def _single_source_lex(
    kg: KnowledgeGraph,
    weights: Sequence[float],
    source: int,
    targets: set[int],
) -> dict[int, tuple[float, tuple[int, ...]]]:
    """Lexicographic Dijkstra from one source, stopping once targets settle."""
    indptr, nbrs, tids = kg.fast_adjacency()
    inf = float("inf")
    dist = [inf] * kg.n_concepts
    dist[source] = 0.0
    seqs: dict[int, tuple[int, ...]] = {source: ()}
    settled = bytearray(kg.n_concepts)
    remaining = set(targets)
    remaining.discard(source)
    results: dict[int, tuple[float, tuple[int, ...]]] = {}
    if source in targets:
        results[source] = (0.0, ())
    heap: list[tuple[float, tuple[int, ...], int]] = [(0.0, (), source)]
    push, pop = heappush, heappop
    while heap and remaining:
        cost, seq, u = pop(heap)
        if settled[u]:
            continue
        settled[u] = 1
        if u in remaining:
            remaining.discard(u)
            results[u] = (cost, seq)
            if not remaining:
                break
        for j in range(indptr[u], indptr[u + 1]):
            v = nbrs[j]
            if settled[v]:
                continue
            tid = tids[j]
            ncost = cost + weights[tid]
            dv = dist[v]
            if ncost < dv:
                nseq = seq + (tid,)
                dist[v] = ncost
                seqs[v] = nseq
                push(heap, (ncost, nseq, v))
            elif ncost == dv:
                nseq = seq + (tid,)
                if nseq < seqs[v]:
                    seqs[v] = nseq
                    push(heap, (ncost, nseq, v))
    return results


def _single_source_fast(
    kg: KnowledgeGraph,
    wadj: list[float],
    source: int,
    targets: set[int],
) -> dict[int, tuple[float, tuple[int, ...]]] | None:
    """Parent-pointer Dijkstra without tie handling.

    Returns None the moment any exact cost tie shows up; the caller then
    reruns the lexicographic search. On tie-free graphs the shortest path
    tree is unique, so the result matches the exact search bit for bit.
    Once every target is settled the search keeps draining pops at the
    final cost: equal-cost entries settle in node-id order here, so a tie
    into an already settled target only becomes visible on that plateau.
    """
    indptr, nbrs, tids = kg.fast_adjacency()
    inf = float("inf")
    n = kg.n_concepts
    dist = [inf] * n
    dist[source] = 0.0
    parent_edge = [-1] * n
    parent_node = [-1] * n
    settled = bytearray(n)
    remaining = set(targets)
    remaining.discard(source)
    results: dict[int, tuple[float, tuple[int, ...]]] = {}
    if source in targets:
        results[source] = (0.0, ())
    if not remaining:
        return results
    heap: list[tuple[float, int]] = [(0.0, source)]
    push, pop = heappush, heappop
    bound = inf
    while heap:
        if not remaining and heap[0][0] > bound:
            break
        cost, u = pop(heap)
        if settled[u]:
            continue
        settled[u] = 1
        if u in remaining:
            remaining.discard(u)
            seq = []
            v = u
            while v != source:
                seq.append(parent_edge[v])
                v = parent_node[v]
            seq.reverse()
            results[u] = (cost, tuple(seq))
            if not remaining:
                bound = cost
        for j in range(indptr[u], indptr[u + 1]):
            v = nbrs[j]
            if v == u:
                continue
            ncost = cost + wadj[j]
            dv = dist[v]
            # No settled short-circuit: a zero-weight edge can tie into an
            # already-settled node, and that ambiguity must also trigger
            # the exact rerun (ncost < dv is impossible for settled v).
            if ncost < dv:
                dist[v] = ncost
                parent_edge[v] = tids[j]
                parent_node[v] = u
                push(heap, (ncost, v))
            elif ncost == dv:
                return None
    return results


@dataclass(frozen=True)
class PathResult:
    source: int
    target: int
    triplets: tuple[int, ...]
    cost: float


def _pairs_from_terminals(
    anchors: Anchors, pairs: str
) -> list[tuple[int, int]]:
    terminals = anchors.terminals
    out = []
    for i, a in enumerate(terminals):
        for b in terminals[i + 1 :]:
            if pairs == "cross":
                cross = (a in anchors.p_concepts and b in anchors.c_concepts) or (
                    a in anchors.c_concepts and b in anchors.p_concepts
                )
                if not cross:
                    continue
            out.append((a, b))
    return out


def dijkstra_paths(
    kg: KnowledgeGraph,
    weights: Sequence[float],
    anchors: Anchors,
    pairs: str = "all",
) -> tuple[list[PathResult], int]:
    """Minimum-cost path for every anchor pair, plus unreachable-pair count.

    Runs one single-source search per distinct pair source (each terminal
    except the last), so a request over m terminals costs m - 1 searches.
    """
    if not (anchors.p_concepts or anchors.c_concepts):
        raise ExtractError("no anchors")
    _check_weights(weights)
    pair_list = _pairs_from_terminals(anchors, pairs)
    by_source: dict[int, set[int]] = {}
    for a, b in pair_list:
        by_source.setdefault(a, set()).add(b)
    wadj = kg.edge_order_weights(weights) if by_source else []
    results: list[PathResult] = []
    skipped = 0
    for source in sorted(by_source):
        targets = by_source[source]
        found = _single_source_fast(kg, wadj, source, targets)
        if found is None:
            found = _single_source_lex(kg, weights, source, targets)
        for target in sorted(targets):
            hit = found.get(target)
            if hit is None:
                skipped += 1
                continue
            results.append(PathResult(source, target, hit[1], hit[0]))
    return results, skipped


def _path_cost(weights: Sequence[float], seq: Iterable[int]) -> float:
    total = 0.0
    for tid in seq:
        total += weights[tid]
    return total


def _path_nodes(kg: KnowledgeGraph, source: int, seq: Iterable[int]) -> list[int]:
    nodes = [source]
    cur = source
    for tid in seq:
        t = kg.triplet(tid)
        cur = t.tail if t.head == cur else t.head
        nodes.append(cur)
    return nodes


def _point_lex_dijkstra(
    kg: KnowledgeGraph,
    weights: Sequence[float],
    source: int,
    target: int,
    removed_nodes: set[int],
    removed_edges: set[int],
) -> tuple[float, tuple[int, ...]] | None:
    indptr, nbrs, tids = kg.fast_adjacency()
    inf = float("inf")
    dist = [inf] * kg.n_concepts
    dist[source] = 0.0
    seqs: dict[int, tuple[int, ...]] = {source: ()}
    settled = bytearray(kg.n_concepts)
    heap: list[tuple[float, tuple[int, ...], int]] = [(0.0, (), source)]
    while heap:
        cost, seq, u = heappop(heap)
        if settled[u]:
            continue
        settled[u] = 1
        if u == target:
            return cost, seq
        for j in range(indptr[u], indptr[u + 1]):
            v = nbrs[j]
            if settled[v] or v in removed_nodes:
                continue
            tid = tids[j]
            if tid in removed_edges:
                continue
            ncost = cost + weights[tid]
            dv = dist[v]
            if ncost < dv:
                nseq = seq + (tid,)
                dist[v] = ncost
                seqs[v] = nseq
                heappush(heap, (ncost, nseq, v))
            elif ncost == dv:
                nseq = seq + (tid,)
                if nseq < seqs[v]:
                    seqs[v] = nseq
                    heappush(heap, (ncost, nseq, v))
    return None


def yen_paths(
    kg: KnowledgeGraph,
    weights: Sequence[float],
    source: int,
    target: int,
    k: int,
) -> list[PathResult]:
    """Up to k distinct loopless paths in non-decreasing cost order.

    k = 1 reduces to the plain weighted shortest path. Costs are
    re-accumulated left to right over the final triplet sequence so equal
    paths always carry bit-identical costs.
    """
    if k < 1:
        raise ExtractError("k must be >= 1")
    _check_weights(weights)
    first = _point_lex_dijkstra(kg, weights, source, target, set(), set())
    if first is None:
        return []
    accepted: list[tuple[float, tuple[int, ...]]] = [
        (_path_cost(weights, first[1]), first[1])
    ]
    candidates: dict[tuple[int, ...], float] = {}
    while len(accepted) < k:
        _, prev_seq = accepted[-1]
        prev_nodes = _path_nodes(kg, source, prev_seq)
        for i, spur_node in enumerate(prev_nodes[:-1]):
            root_seq = prev_seq[:i]
            removed_edges: set[int] = set()
            for _, seq in accepted:
                if seq[:i] == root_seq and len(seq) > i:
                    removed_edges.add(seq[i])
            removed_nodes = set(prev_nodes[:i])
            spur = _point_lex_dijkstra(
                kg, weights, spur_node, target, removed_nodes, removed_edges
            )
            if spur is not None:
                total_seq = root_seq + spur[1]
                if all(total_seq != seq for _, seq in accepted):
                    candidates.setdefault(
                        total_seq, _path_cost(weights, total_seq)
                    )
        if not candidates:
            break
        best_seq = min(candidates, key=lambda s: (candidates[s], s))
        accepted.append((candidates.pop(best_seq), best_seq))
    return [PathResult(source, target, seq, cost) for cost, seq in accepted]


# --- unweighted baselines ----------------------------------------------------


def _bfs_levels(
    kg: KnowledgeGraph, source: int, stop_at: int | None = None
) -> tuple[dict[int, int], dict[int, int]]:
    """Hop distances and shortest-path counts (parallel edges distinct)."""
    indptr, nbrs, tids = kg.fast_adjacency()
    dist = {source: 0}
    sigma = {source: 1}
    frontier = [source]
    d = 0
    stop_dist = None
    while frontier:
        if stop_dist is not None and d >= stop_dist:
            break
        nxt: list[int] = []
        for u in frontier:
            du = dist[u]
            for j in range(indptr[u], indptr[u + 1]):
                v = nbrs[j]
                if v == u:
                    continue
                dv = dist.get(v)
                if dv is None:
                    dist[v] = du + 1
                    sigma[v] = sigma[u]
                    nxt.append(v)
                    if v == stop_at:
                        stop_dist = du + 1
                elif dv == du + 1:
                    sigma[v] += sigma[u]
        frontier = nxt
        d += 1
    return dist, sigma


def _pair_rng(seed: int, src_label: str, dst_label: str) -> random.Random:
    digest = hashlib.sha256(
        f"{seed}|{src_label}|{dst_label}".encode("utf-8")
    ).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


def _sample_shortest_path(
    kg: KnowledgeGraph,
    source: int,
    target: int,
    dist: dict[int, int],
    sigma: dict[int, int],
    rng: random.Random,
) -> tuple[int, ...]:
    """Uniform sample over all unit-weight shortest paths, walking backward."""
    indptr, nbrs, tids = kg.fast_adjacency()
    rev: list[int] = []
    v = target
    while v != source:
        dv = dist[v]
        preds: list[tuple[int, int]] = []
        total = 0
        for j in range(indptr[v], indptr[v + 1]):
            u = nbrs[j]
            if u != v and dist.get(u) == dv - 1:
                preds.append((tids[j], u))
                total += sigma[u]
        preds.sort()
        pick = rng.randrange(total)
        acc = 0
        for tid, u in preds:
            acc += sigma[u]
            if pick < acc:
                rev.append(tid)
                v = u
                break
    return tuple(reversed(rev))


def _all_shortest_paths(
    kg: KnowledgeGraph,
    source: int,
    target: int,
    dist_s: dict[int, int],
    max_paths: int,
) -> tuple[list[tuple[int, ...]], bool]:
    """Enumerate every unit-weight shortest path in lexicographic order."""
    dist_t, _ = _bfs_levels(kg, target, stop_at=source)
    total = dist_s[target]
    indptr, nbrs, tids = kg.fast_adjacency()
    paths: list[tuple[int, ...]] = []
    truncated = False

    def successors(u: int) -> list[tuple[int, int]]:
        du = dist_s[u]
        out = []
        for j in range(indptr[u], indptr[u + 1]):
            v = nbrs[j]
            if v == u:
                continue
            if dist_s.get(v) == du + 1 and dist_t.get(v, -1) == total - du - 1:
                out.append((tids[j], v))
        out.sort()
        return out

    stack: list[tuple[int, tuple[int, ...]]] = [(source, ())]
    # Iterative DFS keeping lexicographic order by pushing successors reversed.
    while stack:
        u, seq = stack.pop()
        if u == target:
            paths.append(seq)
            if len(paths) >= max_paths:
                truncated = True
                break
            continue
        for tid, v in reversed(successors(u)):
            stack.append((v, seq + (tid,)))
    return paths, truncated


# --- CCKG assembly -----------------------------------------------------------


@dataclass
class CckgEdge:
    head: str
    relation: str
    tail: str
    s_a: float
    weight: float
    triplet_id: int


@dataclass
class CckgPath:
    source: str
    target: str
    edge_indices: list[int]
    cost: float


@dataclass
class Cckg:
    """Extracted subgraph: role-tagged nodes, scored edges, path provenance."""

    nodes: dict[str, str]
    edges: list[CckgEdge]
    paths: list[CckgPath]
    skipped_pairs: int = 0
    truncated_pairs: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def anchor_labels(self) -> set[str]:
        return {
            label
            for label, role in self.nodes.items()
            if role in (ROLE_PREMISE, ROLE_CONCLUSION, ROLE_BOTH)
        }

    def to_json_dict(self) -> dict:
        out: dict = {}
        for key in ("id", "premise", "conclusion"):
            if key in self.meta:
                out[key] = self.meta[key]
        out["nodes"] = [
            {"label": label, "role": self.nodes[label]}
            for label in sorted(self.nodes)
        ]
        out["edges"] = [
            {
                "head": e.head,
                "relation": e.relation,
                "tail": e.tail,
                "s_A": e.s_a,
                "weight": e.weight,
                "triplet_id": e.triplet_id,
            }
            for e in self.edges
        ]
        out["paths"] = [
            {
                "source": p.source,
                "target": p.target,
                "edges": list(p.edge_indices),
                "cost": p.cost,
            }
            for p in self.paths
        ]
        out["skipped_pairs"] = self.skipped_pairs
        out["truncated_pairs"] = self.truncated_pairs
        if "pruned_concepts" in self.meta:
            out["pruned_concepts"] = self.meta["pruned_concepts"]
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "Cckg":
        nodes = {n["label"]: n["role"] for n in data["nodes"]}
        edges = [
            CckgEdge(
                head=e["head"],
                relation=e["relation"],
                tail=e["tail"],
                s_a=float(e["s_A"]),
                weight=float(e["weight"]),
                triplet_id=int(e.get("triplet_id", -1)),
            )
            for e in data["edges"]
        ]
        paths = [
            CckgPath(
                source=p["source"],
                target=p["target"],
                edge_indices=[int(i) for i in p["edges"]],
                cost=float(p["cost"]),
            )
            for p in data.get("paths", [])
        ]
        meta = {
            key: data[key]
            for key in ("id", "premise", "conclusion", "pruned_concepts")
            if key in data
        }
        return cls(
            nodes=nodes,
            edges=edges,
            paths=paths,
            skipped_pairs=int(data.get("skipped_pairs", 0)),
            truncated_pairs=int(data.get("truncated_pairs", 0)),
            meta=meta,
        )

    def to_dot(self) -> str:
        lines = ["graph cckg {", "  node [style=filled];"]
        for label in sorted(self.nodes):
            role = self.nodes[label]
            color = NODE_COLORS[role]
            safe = label.replace('"', '\\"')
            lines.append(f'  "{safe}" [fillcolor="{color}", tooltip="{role}"];')
        for e in self.edges:
            head = e.head.replace('"', '\\"')
            tail = e.tail.replace('"', '\\"')
            rel = e.relation.replace('"', '\\"')
            lines.append(f'  "{head}" -- "{tail}" [label="{rel}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_cckg(
    kg: KnowledgeGraph,
    scores: TripletScores,
    anchors: Anchors,
    mode: str = "weighted",
    k: int = 1,
    seed: int = 0,
    pairs: str = "all",
    max_paths_per_pair: int = 100_000,
    meta: dict | None = None,
) -> Cckg:
    """Union of anchor-connecting shortest paths as a role-tagged subgraph.

    mode "weighted" searches with cost (1 - s_A) / 2 (Yen when k > 1);
    "unweighted_one" keeps one uniformly sampled unit-weight shortest path
    per pair; "unweighted_all" keeps every unit-weight shortest path.
    Unreachable pairs are skipped and counted, never fatal.
    """
    if mode not in ("weighted", "unweighted_one", "unweighted_all"):
        raise ExtractError(f"unknown mode {mode!r}")
    if pairs not in ("all", "cross"):
        raise ExtractError(f"unknown pairs setting {pairs!r}")
    if len(scores.s_a) != kg.n_triplets:
        raise ExtractError("scores not aligned to KG")

    s_a = np.asarray(scores.s_a, dtype=np.float64)
    raw_paths: list[PathResult] = []
    skipped = 0
    truncated_pairs = 0

    if mode == "weighted":
        weights = np.minimum(1.0, np.maximum(0.0, (1.0 - s_a) / 2.0)).tolist()
        if k == 1:
            raw_paths, skipped = dijkstra_paths(kg, weights, anchors, pairs)
        else:
            for a, b in _pairs_from_terminals(anchors, pairs):
                found = yen_paths(kg, weights, a, b, k)
                if not found:
                    skipped += 1
                raw_paths.extend(found)
    else:
        unit = [1.0] * kg.n_triplets
        _check_weights(unit)
        bfs_cache: dict[int, tuple[dict[int, int], dict[int, int]]] = {}
        for a, b in _pairs_from_terminals(anchors, pairs):
            if a not in bfs_cache:
                bfs_cache[a] = _bfs_levels(kg, a)
            dist, sigma = bfs_cache[a]
            if b not in dist:
                skipped += 1
                continue
            if mode == "unweighted_one":
                rng = _pair_rng(seed, kg.concept_labels[a], kg.concept_labels[b])
                seq = _sample_shortest_path(kg, a, b, dist, sigma, rng)
                raw_paths.append(PathResult(a, b, seq, float(dist[b])))
            else:
                seqs, was_truncated = _all_shortest_paths(
                    kg, a, b, dist, max_paths_per_pair
                )
                if was_truncated:
                    truncated_pairs += 1
                for seq in seqs:
                    raw_paths.append(PathResult(a, b, seq, float(dist[b])))

    # Assemble nodes and deduplicated edges, ordered by triplet id.
    used_tids = sorted({tid for p in raw_paths for tid in p.triplets})
    edge_index = {tid: i for i, tid in enumerate(used_tids)}
    edges = []
    for tid in used_tids:
        head, rel, tail = kg.triplet_labels(tid)
        sa = float(s_a[tid])
        edges.append(
            CckgEdge(
                head=head,
                relation=rel,
                tail=tail,
                s_a=sa,
                weight=edge_weight(sa),
                triplet_id=tid,
            )
        )

    node_ids: set[int] = set(anchors.terminals)
    for p in raw_paths:
        node_ids.update(_path_nodes(kg, p.source, p.triplets))
    nodes = {
        kg.concept_labels[cid]: anchors.role_of(cid) for cid in sorted(node_ids)
    }

    paths = [
        CckgPath(
            source=kg.concept_labels[p.source],
            target=kg.concept_labels[p.target],
            edge_indices=[edge_index[tid] for tid in p.triplets],
            cost=p.cost,
        )
        for p in raw_paths
    ]
    return Cckg(
        nodes=nodes,
        edges=edges,
        paths=paths,
        skipped_pairs=skipped,
        truncated_pairs=truncated_pairs,
        meta=dict(meta or {}),
    )
