from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cckg.extract import Cckg, CckgEdge
from cckg.kg import KnowledgeGraph


def kg_from(triples) -> KnowledgeGraph:
    return KnowledgeGraph.from_triples(triples)


def random_connected_kg(
    rng: random.Random, n_nodes: int, n_edges: int
) -> tuple[KnowledgeGraph, list[float]]:
    """Random connected multigraph with weights in [0, 1]."""
    assert n_edges >= n_nodes - 1
    triples = []
    for v in range(1, n_nodes):
        u = rng.randrange(v)
        triples.append((f"n{u}", f"r{len(triples)}", f"n{v}"))
    while len(triples) < n_edges:
        u = rng.randrange(n_nodes)
        v = rng.randrange(n_nodes)
        if u == v:
            continue
        triples.append((f"n{u}", f"r{len(triples)}", f"n{v}"))
    kg = kg_from(triples)
    weights = [rng.random() for _ in range(kg.n_triplets)]
    return kg, weights


def make_cckg(node_roles: dict[str, str], edges: list[tuple[str, str, str, float]]) -> Cckg:
    """Hand-built subgraph; edges are (head, relation, tail, s_a)."""
    cckg_edges = [
        CckgEdge(
            head=h,
            relation=r,
            tail=t,
            s_a=s_a,
            weight=(1.0 - s_a) / 2.0,
            triplet_id=i,
        )
        for i, (h, r, t, s_a) in enumerate(edges)
    ]
    return Cckg(nodes=dict(node_roles), edges=cckg_edges, paths=[])


def random_cckg(rng: random.Random, n_nodes: int = 9, extra_edges: int = 5) -> Cckg:
    """Random connected subgraph with premise/conclusion anchors."""
    labels = [f"c{i}" for i in range(n_nodes)]
    edges = []
    for v in range(1, n_nodes):
        u = rng.randrange(v)
        edges.append((labels[u], "RelatedTo", labels[v], rng.uniform(-1, 1)))
    for _ in range(extra_edges):
        u, v = rng.randrange(n_nodes), rng.randrange(n_nodes)
        if u == v:
            continue
        edges.append((labels[u], "Causes", labels[v], rng.uniform(-1, 1)))
    roles = {label: "intermediate" for label in labels}
    roles[labels[0]] = "premise"
    roles[labels[1]] = "conclusion" if n_nodes > 1 else "premise"
    if n_nodes > 4 and rng.random() < 0.5:
        roles[labels[2]] = "both"
    cckg = make_cckg(roles, edges)
    cckg.meta.update({"id": "rnd", "premise": "a premise", "conclusion": "a conclusion"})
    return cckg


@pytest.fixture
def demo_kg_path() -> Path:
    from importlib import resources

    with resources.as_file(
        resources.files("cckg").joinpath("data/demo/demo_kg.tsv")
    ) as path:
        yield path


@pytest.fixture
def demo_queries_path() -> Path:
    from importlib import resources

    with resources.as_file(
        resources.files("cckg").joinpath("data/demo/demo_queries.jsonl")
    ) as path:
        yield path
