from __future__ import annotations

import random

import pytest

from cckg.embeddings import mock_encode
from cckg.prune import (
    PruneError,
    PruneRanking,
    pagerank,
    pagerank_deletion_sequence,
    prune,
    prune_by_pagerank,
    rank_by_pagerank,
    rank_by_similarity,
)

from conftest import make_cckg, random_cckg
from oracles import pagerank_dense


def ranking_for(cckg, order) -> PruneRanking:
    return PruneRanking(
        entries=[(label, float(i)) for i, label in enumerate(order)],
        scorer="similarity",
    )


@pytest.fixture
def seven_node_fixture():
    # p and c are anchors; x1 and x2/x3 form two parallel chains; x4 hangs
    # off x1 and x5 off c.
    roles = {
        "p": "premise",
        "c": "conclusion",
        "x1": "intermediate",
        "x2": "intermediate",
        "x3": "intermediate",
        "x4": "intermediate",
        "x5": "intermediate",
    }
    edges = [
        ("p", "r", "x1", 0.0),
        ("x1", "r", "c", 0.0),
        ("p", "r", "x2", 0.0),
        ("x2", "r", "x3", 0.0),
        ("x3", "r", "c", 0.0),
        ("x1", "r", "x4", 0.0),
        ("c", "r", "x5", 0.0),
    ]
    cckg = make_cckg(roles, edges)
    ranking = ranking_for(cckg, ["x4", "x2", "x3", "x5", "x1", "p", "c"])
    return cckg, ranking


class TestPrune:
    def test_fraction_zero_is_identity(self, seven_node_fixture):
        cckg, ranking = seven_node_fixture
        out = prune(cckg, ranking, fraction=0.0)
        assert set(out.nodes) == set(cckg.nodes)
        assert len(out.edges) == len(cckg.edges)
        assert out.meta["pruned_concepts"] == []

    def test_chain_separator_never_deleted(self):
        cckg = make_cckg(
            {"p": "premise", "x": "intermediate", "c": "conclusion"},
            [("p", "r", "x", 0.0), ("x", "r", "c", 0.0)],
        )
        ranking = ranking_for(cckg, ["x", "p", "c"])
        for fraction in (0.0, 0.25, 0.5, 0.75, 1.0):
            out = prune(cckg, ranking, fraction)
            assert "x" in out.nodes

    def test_separator_check_is_load_bearing(self):
        # Hand-run the same greedy pass without the separator rule: the
        # chain splits, proving the rule is what preserves connectivity.
        cckg = make_cckg(
            {"p": "premise", "x": "intermediate", "c": "conclusion"},
            [("p", "r", "x", 0.0), ("x", "r", "c", 0.0)],
        )
        survivors = {"p", "c"}  # x deleted unconditionally
        edges = [
            e for e in cckg.edges if e.head in survivors and e.tail in survivors
        ]
        assert edges == []  # p and c end up disconnected

    def test_seven_node_full_prune_frozen_expectation(self, seven_node_fixture):
        # Greedy pass by hand: x4 leaf -> delete; x2 deletable (x3 keeps c
        # via x3-c? no: deleting x2 leaves x3 attached through c) -> delete;
        # x3 now leaf -> delete; x5 leaf -> delete; x1 separator -> keep.
        cckg, ranking = seven_node_fixture
        out = prune(cckg, ranking, fraction=1.0)
        assert set(out.nodes) == {"p", "x1", "c"}
        assert out.meta["pruned_concepts"] == ["x4", "x2", "x3", "x5"]

    def test_partial_fractions_nest(self, seven_node_fixture):
        cckg, ranking = seven_node_fixture
        fractions = [0.0, 0.25, 0.5, 0.75, 1.0]
        survivor_sets = [
            set(prune(cckg, ranking, f).nodes) for f in fractions
        ]
        for bigger, smaller in zip(survivor_sets, survivor_sets[1:]):
            assert smaller <= bigger

    def test_partial_prefix_semantics(self, seven_node_fixture):
        cckg, ranking = seven_node_fixture
        out = prune(cckg, ranking, fraction=0.5)  # ceil(0.5 * 4) = 2
        assert out.meta["pruned_concepts"] == ["x4", "x2"]
        assert set(out.nodes) == {"p", "c", "x1", "x3", "x5"}

    def test_full_prune_idempotent(self, seven_node_fixture):
        cckg, ranking = seven_node_fixture
        once = prune(cckg, ranking, fraction=1.0)
        again_ranking = ranking_for(
            once, [l for l in ["x4", "x2", "x3", "x5", "x1", "p", "c"] if l in once.nodes]
        )
        twice = prune(once, again_ranking, fraction=1.0)
        assert set(twice.nodes) == set(once.nodes)
        assert len(twice.edges) == len(once.edges)

    def test_ranking_mismatch_rejected(self, seven_node_fixture):
        cckg, _ = seven_node_fixture
        bad = ranking_for(cckg, ["x4", "x2"])
        with pytest.raises(PruneError):
            prune(cckg, bad, 1.0)

    def test_fraction_out_of_range(self, seven_node_fixture):
        cckg, ranking = seven_node_fixture
        with pytest.raises(PruneError):
            prune(cckg, ranking, 1.5)

    def test_random_graphs_anchors_survive_components_never_increase(self):
        rng = random.Random(9)
        for _ in range(40):
            cckg = random_cckg(rng, n_nodes=rng.randint(4, 10))
            order = sorted(cckg.nodes)
            rng.shuffle(order)
            ranking = ranking_for(cckg, order)
            before = _component_count(cckg)
            out = prune(cckg, ranking, 1.0)
            assert cckg.anchor_labels() <= set(out.nodes)
            assert _component_count(out) <= before


def _component_count(cckg) -> int:
    nodes = set(cckg.nodes)
    adj = {n: set() for n in nodes}
    for e in cckg.edges:
        adj[e.head].add(e.tail)
        adj[e.tail].add(e.head)
    seen, count = set(), 0
    for start in nodes:
        if start in seen:
            continue
        count += 1
        stack = [start]
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            stack.extend(adj[u] - seen)
    return count


class TestSimilarityRanking:
    def test_concept_equal_to_argument_ranked_last(self):
        cckg = make_cckg(
            {"full argument text": "premise", "other": "conclusion"},
            [("full argument text", "r", "other", 0.0)],
        )
        argument = mock_encode("full argument text", 64)
        ranking = rank_by_similarity(
            cckg, argument, lambda text: mock_encode(text, 64)
        )
        assert ranking.entries[-1][0] == "full argument text"
        assert ranking.entries[-1][1] == pytest.approx(1.0, abs=1e-6)

    def test_hand_computed_cosine_order(self):
        cckg = make_cckg(
            {"alpha beta": "premise", "gamma delta": "conclusion"},
            [("alpha beta", "r", "gamma delta", 0.0)],
        )
        argument = mock_encode("alpha beta words", 64)
        embedder = lambda text: mock_encode(text, 64)
        expected = sorted(
            (
                float(mock_encode(label.replace("_", " "), 64) @ argument),
                label,
            )
            for label in cckg.nodes
        )
        ranking = rank_by_similarity(cckg, argument, embedder)
        assert [label for label, _ in ranking.entries] == [
            label for _, label in expected
        ]

    def test_single_concept_ranking(self):
        cckg = make_cckg({"only": "premise"}, [])
        ranking = rank_by_similarity(
            cckg, mock_encode("x", 64), lambda t: mock_encode(t, 64)
        )
        assert len(ranking.entries) == 1

    def test_ascending_order(self):
        rng = random.Random(13)
        cckg = random_cckg(rng)
        ranking = rank_by_similarity(
            cckg, mock_encode("a premise a conclusion", 64),
            lambda t: mock_encode(t, 64),
        )
        scores = [s for _, s in ranking.entries]
        assert scores == sorted(scores)


class TestPagerank:
    def test_matches_dense_oracle_on_fixture(self):
        edges = [
            ("a", "b"),
            ("b", "c"),
            ("c", "d"),
            ("d", "a"),
            ("a", "c"),
            ("e", "a"),
        ]
        nodes = ["a", "b", "c", "d", "e", "f"]  # f isolated
        adj = {n: [] for n in nodes}
        for i, (u, v) in enumerate(edges):
            adj[u].append((i, v))
            adj[v].append((i, u))
        mine = pagerank(nodes, adj, set(nodes))
        oracle = pagerank_dense(nodes, edges)
        for node in nodes:
            assert abs(mine[node] - oracle[node]) < 1e-8

    def test_symmetric_cycle_uniform_deletion_order_by_label(self):
        labels = [f"n{i}" for i in range(5)]
        edges = [
            (labels[i], "r", labels[(i + 1) % 5], 0.0) for i in range(5)
        ]
        roles = {l: "intermediate" for l in labels}
        roles[labels[0]] = "premise"
        roles[labels[3]] = "conclusion"
        cckg = make_cckg(roles, edges)
        ranking = rank_by_pagerank(cckg)
        values = [v for _, v in ranking.entries]
        assert max(values) - min(values) < 1e-9
        # All PageRank equal: order falls back to the label tie-break.
        assert [l for l, _ in ranking.entries] == sorted(cckg.nodes)

    def test_star_center_has_max_pagerank(self):
        center = "hub"
        leaves = [f"leaf{i}" for i in range(4)]
        roles = {center: "intermediate"}
        roles.update({l: "intermediate" for l in leaves})
        roles[leaves[0]] = "premise"
        roles[leaves[1]] = "conclusion"
        edges = [(center, "r", l, 0.0) for l in leaves]
        cckg = make_cckg(roles, edges)
        ranking = rank_by_pagerank(cckg)
        assert ranking.entries[-1][0] == center

    def test_interleaved_deletion_recomputes(self):
        # Chain of intermediates hanging off an anchor: recomputation lets
        # the chain be eaten from its tail inward, one node per step.
        roles = {
            "p": "premise",
            "c": "conclusion",
            "t1": "intermediate",
            "t2": "intermediate",
            "t3": "intermediate",
        }
        edges = [
            ("p", "r", "c", 0.0),
            ("c", "r", "t1", 0.0),
            ("t1", "r", "t2", 0.0),
            ("t2", "r", "t3", 0.0),
        ]
        cckg = make_cckg(roles, edges)
        sequence = pagerank_deletion_sequence(cckg)
        assert sequence == ["t3", "t2", "t1"]
        out = prune_by_pagerank(cckg, 1.0)
        assert set(out.nodes) == {"p", "c"}

    def test_partial_pagerank_prune_nests(self):
        rng = random.Random(21)
        cckg = random_cckg(rng, n_nodes=8)
        survivors = [
            set(prune_by_pagerank(cckg, f).nodes)
            for f in (0.0, 0.5, 1.0)
        ]
        assert survivors[2] <= survivors[1] <= survivors[0]

    def test_bad_damping_rejected(self):
        rng = random.Random(2)
        cckg = random_cckg(rng)
        with pytest.raises(PruneError):
            rank_by_pagerank(cckg, damping=1.5)
