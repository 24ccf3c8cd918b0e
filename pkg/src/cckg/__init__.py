"""Contextualized commonsense knowledge-graph extraction toolkit."""

__version__ = "0.1.0"

from .embeddings import (
    EmbeddingMatrix,
    TripletScores,
    cosine_scores,
    load_embeddings,
    mock_encode,
    mock_encode_many,
    save_embeddings,
    score_triplets,
)
from .estimators import CckgExtractor, CckgFeaturizer, CckgPruner
from .extract import (
    Anchors,
    Cckg,
    CckgEdge,
    CckgPath,
    ConstituentScores,
    build_cckg,
    dijkstra_paths,
    edge_weight,
    select_anchors,
    yen_paths,
)
from .features import (
    FEATURE_NAMES,
    FeatureVector,
    compute_features,
    connectivity_features,
    distance_features,
    export_matrix,
    size_features,
    text_features,
)
from .kg import KnowledgeGraph, KgError, load_kg, merge_gold_graphs, normalize_label
from .metrics import (
    GraphScore,
    InstanceGraph,
    concept_triplet_prf,
    evaluate_corpus,
    ged_normalized,
    graph_bertscore,
    graph_edit_distance,
    score_graphs,
)
from .prune import (
    PruneRanking,
    prune,
    prune_by_pagerank,
    rank_by_pagerank,
    rank_by_similarity,
)
from .verbalize import (
    TemplateSet,
    builtin_templates,
    load_templates,
    verbalize,
    verbalize_all,
    verbalize_labels,
    verbalize_sentences,
)

__all__ = [
    "Anchors",
    "Cckg",
    "CckgEdge",
    "CckgExtractor",
    "CckgFeaturizer",
    "CckgPath",
    "CckgPruner",
    "ConstituentScores",
    "EmbeddingMatrix",
    "FEATURE_NAMES",
    "FeatureVector",
    "GraphScore",
    "InstanceGraph",
    "KgError",
    "KnowledgeGraph",
    "PruneRanking",
    "TemplateSet",
    "TripletScores",
    "build_cckg",
    "builtin_templates",
    "compute_features",
    "concept_triplet_prf",
    "connectivity_features",
    "cosine_scores",
    "dijkstra_paths",
    "distance_features",
    "edge_weight",
    "evaluate_corpus",
    "export_matrix",
    "ged_normalized",
    "graph_bertscore",
    "graph_edit_distance",
    "load_embeddings",
    "load_kg",
    "load_templates",
    "merge_gold_graphs",
    "mock_encode",
    "mock_encode_many",
    "normalize_label",
    "prune",
    "prune_by_pagerank",
    "rank_by_pagerank",
    "rank_by_similarity",
    "save_embeddings",
    "score_graphs",
    "score_triplets",
    "select_anchors",
    "size_features",
    "text_features",
    "verbalize",
    "verbalize_all",
    "verbalize_labels",
    "verbalize_sentences",
    "yen_paths",
]
