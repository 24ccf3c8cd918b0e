"""Acceptance suite: one test per criterion, one PASS line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s``. The throughput
criterion builds a 1,000,000-triplet synthetic KG and takes a few minutes.
"""

from __future__ import annotations

import json
import random
import time
from pathlib import Path

import numpy as np
import pytest

from cckg.cli import main as cli_main
from cckg.embeddings import (
    EmbeddingMatrix,
    TripletScores,
    mock_encode_many,
    save_embeddings,
)
from cckg.extract import (
    Anchors,
    build_cckg,
    dijkstra_paths,
    edge_weight,
    select_anchors,
    yen_paths,
)
from cckg.features import FEATURE_NAMES, connectivity_features, distance_features
from cckg.kg import KnowledgeGraph
from cckg.metrics import (
    InstanceGraph,
    concept_triplet_prf,
    default_sentence_similarity,
    ged_normalized,
    graph_bertscore,
    graph_edit_distance,
)
from cckg.prune import PruneRanking, pagerank, prune
from cckg.verbalize import builtin_templates

from conftest import make_cckg, random_cckg, random_connected_kg
from oracles import (
    brute_force_k_shortest,
    brute_force_min_cut,
    brute_force_shortest,
    exhaustive_ged,
    greedy_assignment_total,
    pagerank_dense,
    path_cost,
)


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


def test_criterion_path_optimality():
    rng = random.Random(1001)
    start = time.monotonic()
    checked = 0
    for _ in range(200):
        n_nodes = rng.randint(4, 12)
        n_edges = rng.randint(n_nodes - 1, 24)
        kg, weights = random_connected_kg(rng, n_nodes, max(n_edges, n_nodes - 1))
        a, b = rng.sample(range(kg.n_concepts), 2)
        anchors = Anchors({min(a, b)}, {max(a, b)}, [], [])
        paths, skipped = dijkstra_paths(kg, weights, anchors)
        assert skipped == 0
        expected_cost, expected_seq = brute_force_shortest(
            kg, weights, min(a, b), max(a, b)
        )
        assert paths[0].cost == expected_cost  # float-exact, same summation order
        assert paths[0].triplets == expected_seq
        checked += 1
    elapsed = time.monotonic() - start
    report(
        "path optimality: 200 random graphs match exhaustive enumeration",
        checked == 200 and elapsed < 5.0,
        f"{elapsed:.2f}s",
    )


def test_criterion_yen_correctness():
    rng = random.Random(2002)
    for _ in range(20):
        kg, weights = random_connected_kg(rng, rng.randint(4, 8), 12)
        a, b = rng.sample(range(kg.n_concepts), 2)
        anchors = Anchors({min(a, b)}, {max(a, b)}, [], [])
        d_paths, _ = dijkstra_paths(kg, weights, anchors)
        y1 = yen_paths(kg, weights, min(a, b), max(a, b), k=1)
        assert y1[0].triplets == d_paths[0].triplets
    for _ in range(50):
        kg, weights = random_connected_kg(rng, rng.randint(4, 8), 14)
        a, b = rng.sample(range(kg.n_concepts), 2)
        found = yen_paths(kg, weights, a, b, k=3)
        expected = brute_force_k_shortest(kg, weights, a, b, 3)
        assert len(found) == len(expected)
        costs = [path_cost(weights, p.triplets) for p in found]
        assert costs == [cost for cost, _ in expected]
        assert costs == sorted(costs)
    report("yen: k=1 equals dijkstra; k=3 matches brute-force top-3", True)


def test_criterion_weight_law():
    grid = {-1.0: 1.0, -0.5: 0.75, 0.0: 0.5, 0.5: 0.25, 1.0: 0.0}
    for s_a, expected in grid.items():
        assert edge_weight(s_a) == expected
    rng = random.Random(3003)
    # Power-of-two factors keep float comparisons exact under rescaling.
    for _ in range(50):
        kg, weights = random_connected_kg(rng, rng.randint(5, 10), 16)
        a, b = rng.sample(range(kg.n_concepts), 2)
        anchors = Anchors({min(a, b)}, {max(a, b)}, [], [])
        base, _ = dijkstra_paths(kg, weights, anchors)
        base_edges = [p.triplets for p in base]
        for factor in (0.5, 2.0, 8.0):
            scaled, _ = dijkstra_paths(
                kg, [w * factor for w in weights], anchors
            )
            assert [p.triplets for p in scaled] == base_edges
    report("weight law: grid exact; positive rescaling keeps edge sets", True)


def test_criterion_anchor_bound():
    rng = random.Random(4004)
    for _ in range(30):
        kg, _ = random_connected_kg(rng, rng.randint(5, 12), 20)
        n = kg.n_triplets
        for m in (1, 2, 3):
            scores = TripletScores(
                s_p=np.array([rng.random() for _ in range(n)]),
                s_c=np.array([rng.random() for _ in range(n)]),
                s_a=np.zeros(n),
            )
            anchors = select_anchors(kg, scores, m)
            selected = set(anchors.p_triplets) | set(anchors.c_triplets)
            concepts = anchors.p_concepts | anchors.c_concepts
            assert len(selected) <= 2 * m
            assert len(concepts) <= 4 * m
    report("anchor bound: <= 2m triplets and <= 4m concepts for m in {1,2,3}", True)


def _components(cckg) -> int:
    nodes = set(cckg.nodes)
    adj = {n: set() for n in nodes}
    for e in cckg.edges:
        adj[e.head].add(e.tail)
        adj[e.tail].add(e.head)
    seen, count = set(), 0
    for s in nodes:
        if s in seen:
            continue
        count += 1
        stack = [s]
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            stack.extend(adj[u] - seen)
    return count


def test_criterion_pruning_suite():
    start = time.monotonic()
    rng = random.Random(5005)
    fractions = (0.0, 0.25, 0.5, 0.75, 1.0)
    for _ in range(100):
        cckg = random_cckg(rng, n_nodes=rng.randint(3, 12))
        order = sorted(cckg.nodes)
        rng.shuffle(order)
        ranking = PruneRanking([(l, float(i)) for i, l in enumerate(order)], "similarity")
        before_components = _components(cckg)
        survivors = []
        for fraction in fractions:
            out = prune(cckg, ranking, fraction)
            assert cckg.anchor_labels() <= set(out.nodes)
            assert _components(out) <= before_components
            survivors.append(set(out.nodes))
        for bigger, smaller in zip(survivors, survivors[1:]):
            assert smaller <= bigger
        full = prune(cckg, ranking, 1.0)
        re_ranking = PruneRanking(
            [(l, float(i)) for i, l in enumerate(sorted(full.nodes))], "similarity"
        )
        again = prune(full, re_ranking, 1.0)
        assert set(again.nodes) == set(full.nodes)
    chain = make_cckg(
        {"p": "premise", "x": "intermediate", "c": "conclusion"},
        [("p", "r", "x", 0.0), ("x", "r", "c", 0.0)],
    )
    chain_ranking = PruneRanking([("x", 0.0), ("p", 1.0), ("c", 2.0)], "similarity")
    assert "x" in prune(chain, chain_ranking, 1.0).nodes
    elapsed = time.monotonic() - start
    report(
        "pruning suite: anchors survive, components monotone, fractions nest, "
        "idempotent, separator kept",
        elapsed < 10.0,
        f"{elapsed:.2f}s for 100 graphs",
    )


def test_criterion_baseline_containment():
    rng = random.Random(6006)
    combos = 0
    while combos < 100:
        kg, _ = random_connected_kg(rng, rng.randint(5, 10), 18)
        n = kg.n_triplets
        scores = TripletScores(np.zeros(n), np.zeros(n), np.zeros(n))
        terminals = rng.sample(range(kg.n_concepts), 4)
        anchors = Anchors(set(terminals[:2]), set(terminals[2:]), [], [])
        for seed in range(5):
            one = build_cckg(kg, scores, anchors, mode="unweighted_one", seed=seed)
            all_mode = build_cckg(kg, scores, anchors, mode="unweighted_all")
            one_ids = {e.triplet_id for e in one.edges}
            all_ids = {e.triplet_id for e in all_mode.edges}
            assert one_ids <= all_ids
            combos += 1
    report("baseline containment: unweighted_all edges contain unweighted_one", True)


def test_criterion_feature_suite():
    assert len(FEATURE_NAMES) == 19
    triangle = make_cckg(
        {"a": "premise", "b": "conclusion", "c": "intermediate"},
        [("a", "r", "b", 0.0), ("b", "r", "c", 0.0), ("c", "r", "a", 0.0)],
    )
    *_, density, transitivity = connectivity_features(triangle)
    assert density == 1.0 and transitivity == 1.0

    rng = random.Random(7007)
    for _ in range(20):
        cckg = random_cckg(rng, n_nodes=rng.randint(4, 10))
        p_set = {n for n, r in cckg.nodes.items() if r in ("premise", "both")}
        c_set = {n for n, r in cckg.nodes.items() if r in ("conclusion", "both")}
        if p_set & c_set:
            continue
        cut_w, cut_u, _, _ = distance_features(cckg)
        for weighted, got in ((True, cut_w), (False, cut_u)):
            edges = [
                (e.head, e.tail, (1.0 + e.s_a) / 2.0 if weighted else 1.0)
                for e in cckg.edges
            ]
            oracle = brute_force_min_cut(list(cckg.nodes), edges, p_set, c_set)
            assert abs(got - oracle) < 1e-9

    for _ in range(10):
        cckg = random_cckg(rng, n_nodes=rng.randint(3, 9))
        nodes = sorted(cckg.nodes)
        adj = {n: [] for n in nodes}
        edge_pairs = []
        for i, e in enumerate(cckg.edges):
            adj[e.head].append((i, e.tail))
            adj[e.tail].append((i, e.head))
            edge_pairs.append((e.head, e.tail))
        mine = pagerank(nodes, adj, set(nodes))
        oracle = pagerank_dense(nodes, edge_pairs)
        for node in nodes:
            assert abs(mine[node] - oracle[node]) < 1e-8
    report(
        "feature suite: 19 features, triangle density/transitivity, "
        "min-cut and pagerank oracles",
        True,
    )


def test_criterion_metric_identities():
    templates = builtin_templates("explaknow", "natural")
    g = InstanceGraph.from_triples(
        [("a", "IsA", "b"), ("b", "Causes", "c"), ("c", "Desires", "d")]
    )
    assert concept_triplet_prf(g, g) == (1.0,) * 6
    assert ged_normalized(g, g) == 0.0
    assert graph_bertscore(g, g, default_sentence_similarity, templates) == (
        pytest.approx(1.0, abs=1e-6)
    )

    disjoint = InstanceGraph.from_triples([("x", "IsA", "y")])
    assert concept_triplet_prf(disjoint, g) == (0.0,) * 6
    empty = InstanceGraph.from_triples([])
    assert concept_triplet_prf(empty, g) == (0.0,) * 6
    assert ged_normalized(empty, g) == 1.0

    rng = random.Random(8008)
    labels = "abcde"
    rels = ["IsA", "Causes"]
    pairs_checked = 0
    while pairs_checked < 20:
        t1 = {
            (rng.choice(labels), rng.choice(rels), rng.choice(labels))
            for _ in range(rng.randint(1, 4))
        }
        t2 = {
            (rng.choice(labels), rng.choice(rels), rng.choice(labels))
            for _ in range(rng.randint(1, 4))
        }
        g1, g2 = InstanceGraph.from_triples(t1), InstanceGraph.from_triples(t2)
        if max(g1.n_nodes, g2.n_nodes) > 5:
            continue
        raw, exact = graph_edit_distance(g1, g2)
        assert exact
        assert raw == exhaustive_ged(g1.nodes, g1.triples, g2.nodes, g2.triples)
        pairs_checked += 1

    from scipy.optimize import linear_sum_assignment

    np_rng = np.random.default_rng(8009)
    for _ in range(50):
        matrix = np_rng.uniform(size=(5, 5))
        rows, cols = linear_sum_assignment(matrix, maximize=True)
        assert float(matrix[rows, cols].sum()) >= greedy_assignment_total(matrix) - 1e-12
    report(
        "metric identities: perfect/disjoint cases, exact GED oracle, "
        "optimal assignment >= greedy",
        True,
    )


# --- determinism & throughput at the million-triplet scale --------------------

N_CONCEPTS = 100_000
N_TRIPLETS = 1_000_000
DIM = 128

RELATIONS = [
    "IsA", "Causes", "UsedFor", "HasA", "PartOf", "Desires", "HasProperty",
    "CapableOf", "AtLocation", "HasSubevent", "MadeOf", "Antonym", "Synonym",
    "DefinedAs", "Entails", "HasContext", "MannerOf", "CreatedBy", "SymbolOf",
    "DistinctFrom", "FormOf", "InstanceOf", "LocatedNear", "CausesDesire",
]

WORDS = [f"word{i:04d}" for i in range(1000)]

QUERY_TEXTS = [
    ("word0007 word0external things about word0011", "word0900 word0002 outcomes"),
    ("word0123 word0456 interplay", "word0789 word0012 effects"),
    ("word0200 word0201 word0202", "word0300 word0301"),
    ("word0042 phenomena word0999", "word0500 word0555 word0444"),
    ("word0101 word0110 word0111", "word0888 word0777"),
    ("word0650 word0651 narrative", "word0050 word0051 claims"),
]


def synthetic_kg() -> KnowledgeGraph:
    rng = np.random.default_rng(90_001)
    labels = [f"{WORDS[i % 1000]}_{WORDS[i // 1000]}" for i in range(N_CONCEPTS)]
    draw = int(N_TRIPLETS * 1.1)
    heads = rng.integers(0, N_CONCEPTS, draw)
    tails = rng.integers(0, N_CONCEPTS, draw)
    rels = rng.integers(0, len(RELATIONS), draw)
    mask = heads != tails
    heads, tails, rels = heads[mask], tails[mask], rels[mask]
    key = (heads.astype(np.int64) * N_CONCEPTS + tails) * len(RELATIONS) + rels
    _, first = np.unique(key, return_index=True)
    order = np.sort(first)[:N_TRIPLETS]
    assert len(order) == N_TRIPLETS
    return KnowledgeGraph(
        labels, list(RELATIONS), heads[order], rels[order], tails[order]
    )


@pytest.fixture(scope="module")
def big_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("bigkg")
    kg = synthetic_kg()
    snapshot = root / "kg.ckg"
    kg.save_snapshot(snapshot)

    from cckg.verbalize import verbalize_sentences

    templates = builtin_templates("conceptnet", "natural")
    sentences = verbalize_sentences(kg, templates)
    matrix = mock_encode_many(sentences, DIM)
    emb_path = root / "triplets.emb"
    save_embeddings(matrix, emb_path, source=f"synthetic:{N_TRIPLETS}")

    queries_path = root / "queries.jsonl"
    with open(queries_path, "w", encoding="utf-8") as fh:
        for i, (premise, conclusion) in enumerate(QUERY_TEXTS):
            fh.write(
                json.dumps(
                    {"id": f"q{i:03d}", "premise": premise, "conclusion": conclusion}
                )
                + "\n"
            )
    qtexts = []
    for premise, conclusion in QUERY_TEXTS:
        qtexts.extend([premise, conclusion, f"{premise} {conclusion}"])
    qmatrix = mock_encode_many(qtexts, DIM)
    qemb_path = root / "queries.emb"
    save_embeddings(qmatrix, qemb_path, source="queries")
    return root, kg, matrix


def _pipeline(root: Path, tag: str, jobs: int) -> dict[str, bytes]:
    extracted = root / f"extracted_{tag}"
    pruned = root / f"pruned_{tag}"
    feats = root / f"features_{tag}"
    assert (
        cli_main(
            [
                "extract",
                "--kg", str(root / "kg.ckg"),
                "--queries", str(root / "queries.jsonl"),
                "--encoder", "files",
                "--embeddings", str(root / "triplets.emb"),
                "--query-embeddings", str(root / "queries.emb"),
                "--jobs", str(jobs),
                "--out", str(extracted),
            ]
        )
        == 0
    )
    assert (
        cli_main(
            ["prune", "--in", str(extracted), "--dim", str(DIM), "--out", str(pruned)]
        )
        == 0
    )
    assert (
        cli_main(
            ["features", "--in", str(pruned), "--dim", str(DIM), "--out", str(feats)]
        )
        == 0
    )
    out: dict[str, bytes] = {}
    for directory in (extracted, pruned, feats):
        for path in sorted(directory.iterdir()):
            out[f"{directory.name.rsplit('_', 1)[0]}/{path.name}"] = path.read_bytes()
    return out


@pytest.mark.slow
def test_criterion_determinism_and_throughput(big_run):
    root, _, matrix = big_run

    run_a = _pipeline(root, "a", jobs=1)
    run_b = _pipeline(root, "b", jobs=1)
    assert run_a == run_b

    run_jobs = _pipeline(root, "j4", jobs=4)
    assert run_jobs == run_a

    # Per-argument extraction timing, measured after snapshot load.
    from cckg.estimators import CckgExtractor

    kg = KnowledgeGraph.load_snapshot(root / "kg.ckg")
    extractor = CckgExtractor(
        kg=kg, triplet_embeddings=EmbeddingMatrix(matrix.data), dim=DIM
    ).fit()
    timings = []
    for i, (premise, conclusion) in enumerate(QUERY_TEXTS):
        start = time.monotonic()
        extractor.extract_one(
            {"id": f"q{i:03d}", "premise": premise, "conclusion": conclusion}
        )
        timings.append(time.monotonic() - start)
    worst = max(timings)
    report(
        "determinism & throughput: byte-identical across runs and jobs {1,4}; "
        "per-argument extraction < 5 s",
        worst < 5.0,
        f"worst {worst:.2f}s over {len(timings)} arguments",
    )
