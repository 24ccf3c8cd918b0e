"""Scikit-learn style transformers over the extraction pipeline.

``CckgExtractor`` turns (premise, conclusion) queries into subgraphs,
``CckgPruner`` prunes them, ``CckgFeaturizer`` maps them to the fixed
19-column feature matrix. The three compose in a sklearn ``Pipeline``
in front of any downstream classifier.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .embeddings import EmbeddingMatrix, cosine_scores, mock_encode, score_triplets
from .extract import (
    Anchors,
    Cckg,
    ConstituentScores,
    ExtractError,
    ROLE_CONCLUSION,
    ROLE_PREMISE,
    build_cckg,
    select_anchors,
)
from .features import FEATURE_NAMES, compute_features
from .kg import KnowledgeGraph
from .prune import prune, prune_by_pagerank, rank_by_similarity

UNIFORM_NLI = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


def _as_query(entry) -> dict:
    if isinstance(entry, Mapping):
        query = dict(entry)
    elif (
        isinstance(entry, Sequence)
        and not isinstance(entry, str)
        and len(entry) == 2
    ):
        query = {"premise": entry[0], "conclusion": entry[1]}
    else:
        raise ExtractError(f"cannot interpret query {entry!r}")
    if "premise" not in query or "conclusion" not in query:
        raise ExtractError("query needs 'premise' and 'conclusion'")
    return query


def argument_text(premise: str, conclusion: str) -> str:
    """The full argument is the premise concatenated with the conclusion."""
    return f"{premise} {conclusion}"


def resolve_constituent_side(text: str, premise: str, conclusion: str) -> list[str]:
    """Attribute a constituent span to the side(s) whose text contains it."""
    sides = []
    if text in premise:
        sides.append(ROLE_PREMISE)
    if text in conclusion:
        sides.append(ROLE_CONCLUSION)
    return sides or [ROLE_PREMISE, ROLE_CONCLUSION]


class CckgExtractor(BaseEstimator, TransformerMixin):
    """Extract one contextualized subgraph per (premise, conclusion) query.

    Parameters mirror the pipeline knobs: ``m`` top triplets per side,
    ``k`` paths per anchor pair, ``mode`` in {weighted, unweighted_one,
    unweighted_all}, ``pairs`` in {all, cross}. ``encoder`` is either
    "mock" or a callable text -> unit vector matching the embedding dim.
    Queries may carry precomputed "embedding_p"/"embedding_c"/"embedding_a"
    vectors, which bypass the encoder.
    """

    def __init__(
        self,
        kg: KnowledgeGraph | None = None,
        triplet_embeddings: EmbeddingMatrix | None = None,
        encoder="mock",
        dim: int = 128,
        m: int = 1,
        k: int = 1,
        mode: str = "weighted",
        pairs: str = "all",
        seed: int = 0,
        templates=None,
    ) -> None:
        self.kg = kg
        self.triplet_embeddings = triplet_embeddings
        self.encoder = encoder
        self.dim = dim
        self.m = m
        self.k = k
        self.mode = mode
        self.pairs = pairs
        self.seed = seed
        self.templates = templates

    def _encode(self, text: str) -> np.ndarray:
        if callable(self.encoder):
            return np.asarray(self.encoder(text), dtype=np.float32)
        if self.encoder == "mock":
            return mock_encode(text, self.triplet_embeddings_.dim)
        raise ExtractError(f"unknown encoder {self.encoder!r}")

    def fit(self, X=None, y=None) -> "CckgExtractor":
        if self.kg is None:
            raise ExtractError("CckgExtractor needs a KnowledgeGraph")
        if self.triplet_embeddings is not None:
            embeddings = self.triplet_embeddings
        else:
            from .verbalize import builtin_templates, verbalize_sentences
            from .embeddings import mock_encode_many

            templates = self.templates or builtin_templates()
            sentences = verbalize_sentences(self.kg, templates)
            embeddings = mock_encode_many(sentences, self.dim)
        if embeddings.rows != self.kg.n_triplets:
            raise ExtractError(
                f"embeddings have {embeddings.rows} rows, "
                f"KG has {self.kg.n_triplets} triplets"
            )
        self.triplet_embeddings_ = embeddings
        self.n_triplets_ = self.kg.n_triplets
        return self

    def _constituent_scores(
        self, query: dict, base_scores
    ) -> list[ConstituentScores] | None:
        raw = query.get("constituents")
        if not raw:
            return None
        premise, conclusion = query["premise"], query["conclusion"]
        spans: list[ConstituentScores] = []
        have_side = {ROLE_PREMISE: False, ROLE_CONCLUSION: False}
        for span in raw:
            if span.get("is_leaf"):
                continue
            sides = (
                [span["side"]]
                if span.get("side")
                else resolve_constituent_side(span["text"], premise, conclusion)
            )
            vec = (
                np.asarray(span["embedding"], dtype=np.float32)
                if span.get("embedding") is not None
                else self._encode(span["text"])
            )
            scores = cosine_scores(self.triplet_embeddings_, vec)
            for side in sides:
                spans.append(
                    ConstituentScores(text=span["text"], side=side, scores=scores)
                )
                have_side[side] = True
        if not spans:
            return None
        # A side with only leaf spans falls back to whole-text selection.
        if not have_side[ROLE_PREMISE]:
            spans.append(
                ConstituentScores(
                    text=premise, side=ROLE_PREMISE, scores=base_scores.s_p
                )
            )
        if not have_side[ROLE_CONCLUSION]:
            spans.append(
                ConstituentScores(
                    text=conclusion, side=ROLE_CONCLUSION, scores=base_scores.s_c
                )
            )
        return spans

    def _score(self, query: dict):
        premise, conclusion = query["premise"], query["conclusion"]
        q_p = query.get("embedding_p")
        q_c = query.get("embedding_c")
        q_a = query.get("embedding_a")
        if q_p is None:
            q_p = self._encode(premise)
        if q_c is None:
            q_c = self._encode(conclusion)
        if q_a is None:
            q_a = self._encode(argument_text(premise, conclusion))
        return score_triplets(
            self.triplet_embeddings_,
            np.asarray(q_p),
            np.asarray(q_c),
            np.asarray(q_a),
        )

    def extract_one(self, entry) -> Cckg:
        check_is_fitted(self, "triplet_embeddings_")
        query = _as_query(entry)
        scores = self._score(query)
        constituents = self._constituent_scores(query, scores)
        anchors: Anchors = select_anchors(self.kg, scores, self.m, constituents)
        meta = {
            "premise": query["premise"],
            "conclusion": query["conclusion"],
        }
        if "id" in query:
            meta["id"] = query["id"]
        return build_cckg(
            self.kg,
            scores,
            anchors,
            mode=self.mode,
            k=self.k,
            seed=self.seed,
            pairs=self.pairs,
            meta=meta,
        )

    def transform(self, X) -> list[Cckg]:
        return [self.extract_one(entry) for entry in X]


class CckgPruner(BaseEstimator, TransformerMixin):
    """Prune subgraphs by similarity or PageRank ranking.

    ``fraction`` applies the leading share of the full deletion sequence;
    0 is the identity, 1 full pruning. The similarity ranker embeds
    concept labels with ``encoder`` ("mock" or callable) and compares them
    to the argument text stored in each graph's metadata.
    """

    def __init__(
        self,
        ranker: str = "similarity",
        fraction: float = 1.0,
        encoder="mock",
        dim: int = 128,
        damping: float = 0.85,
        concept_embedder: Callable[[str], np.ndarray] | None = None,
        argument_vectors: Mapping[str, np.ndarray] | None = None,
    ) -> None:
        self.ranker = ranker
        self.fraction = fraction
        self.encoder = encoder
        self.dim = dim
        self.damping = damping
        self.concept_embedder = concept_embedder
        self.argument_vectors = argument_vectors

    def fit(self, X=None, y=None) -> "CckgPruner":
        if self.ranker not in ("similarity", "pagerank"):
            raise ValueError(f"unknown ranker {self.ranker!r}")
        self.ranker_ = self.ranker
        return self

    def _encode(self, text: str) -> np.ndarray:
        if callable(self.encoder):
            return np.asarray(self.encoder(text), dtype=np.float32)
        return mock_encode(text, self.dim)

    def prune_one(self, cckg: Cckg) -> Cckg:
        check_is_fitted(self, "ranker_")
        if self.ranker == "pagerank":
            return prune_by_pagerank(cckg, self.fraction, self.damping)
        arg_id = cckg.meta.get("id")
        if self.argument_vectors is not None and arg_id in self.argument_vectors:
            argument = np.asarray(self.argument_vectors[arg_id], dtype=np.float64)
        else:
            premise = cckg.meta.get("premise")
            conclusion = cckg.meta.get("conclusion")
            if premise is None or conclusion is None:
                raise ValueError(
                    "similarity pruning needs premise/conclusion metadata on the graph"
                )
            argument = self._encode(argument_text(premise, conclusion))
        embedder = self.concept_embedder or self._encode
        ranking = rank_by_similarity(cckg, argument, embedder)
        return prune(cckg, ranking, self.fraction)

    def transform(self, X: Sequence[Cckg]) -> list[Cckg]:
        return [self.prune_one(cckg) for cckg in X]


class CckgFeaturizer(BaseEstimator, TransformerMixin):
    """Map subgraphs to the fixed 19-column feature matrix.

    NLI probabilities come from ``nli``: None for the uniform mock value,
    a mapping keyed by query id, or a callable (premise, conclusion) ->
    three probabilities. ``query_vectors`` optionally supplies precomputed
    (premise, conclusion) embedding pairs keyed by query id.
    """

    def __init__(
        self,
        encoder="mock",
        dim: int = 128,
        nli=None,
        query_vectors: Mapping[str, tuple[np.ndarray, np.ndarray]] | None = None,
    ) -> None:
        self.encoder = encoder
        self.dim = dim
        self.nli = nli
        self.query_vectors = query_vectors

    def fit(self, X=None, y=None) -> "CckgFeaturizer":
        self.n_features_ = len(FEATURE_NAMES)
        return self

    def _encode(self, text: str) -> np.ndarray:
        if callable(self.encoder):
            return np.asarray(self.encoder(text), dtype=np.float32)
        return mock_encode(text, self.dim)

    def _nli_for(self, cckg: Cckg) -> tuple[float, float, float]:
        if self.nli is None:
            return UNIFORM_NLI
        if callable(self.nli):
            return tuple(
                float(x)
                for x in self.nli(cckg.meta["premise"], cckg.meta["conclusion"])
            )
        return tuple(float(x) for x in self.nli[cckg.meta["id"]])

    def featurize_one(self, cckg: Cckg):
        check_is_fitted(self, "n_features_")
        arg_id = cckg.meta.get("id")
        if self.query_vectors is not None and arg_id in self.query_vectors:
            vec_p, vec_c = self.query_vectors[arg_id]
        else:
            premise = cckg.meta.get("premise")
            conclusion = cckg.meta.get("conclusion")
            if premise is None or conclusion is None:
                raise ValueError(
                    "featurizer needs premise/conclusion metadata or query_vectors"
                )
            vec_p = self._encode(premise)
            vec_c = self._encode(conclusion)
        return compute_features(cckg, vec_p, vec_c, self._nli_for(cckg))

    def transform(self, X: Sequence[Cckg]) -> np.ndarray:
        rows = [self.featurize_one(cckg).values() for cckg in X]
        return np.asarray(rows, dtype=np.float64).reshape(len(rows), len(FEATURE_NAMES))

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        return np.asarray(FEATURE_NAMES, dtype=object)
