"""NLI probability backends: entail / neutral / contradict per pair.

The real backend runs a sequence-classification NLI checkpoint.
``mock:lexical`` derives deterministic probabilities from token overlap
and negation cues, good enough to exercise the file contract (sums to 1,
identical premise/conclusion maximizes entailment).
"""

from __future__ import annotations

import math

DEFAULT_NLI = "roberta-large-mnli"

_NEGATIONS = {"not", "no", "never", "cannot", "n't", "without"}


class ModelUnavailable(RuntimeError):
    pass


def _mock_pair(premise: str, conclusion: str) -> tuple[float, float, float]:
    p_tokens = set(premise.lower().split())
    c_tokens = set(conclusion.lower().split())
    union = p_tokens | c_tokens
    overlap = len(p_tokens & c_tokens) / len(union) if union else 1.0
    negation_gap = len(
        (p_tokens ^ c_tokens) & _NEGATIONS
    )  # negation on one side only
    logits = (3.0 * overlap, 1.0, 1.0 * negation_gap)
    exps = [math.exp(x) for x in logits]
    total = sum(exps)
    entail, neutral, contradict = (x / total for x in exps)
    return entail, neutral, contradict


def _model_pairs(
    pairs: list[tuple[str, str]], model: str
) -> list[tuple[float, float, float]]:
    try:
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer
    except ImportError as exc:
        raise ModelUnavailable(
            f"transformers/torch are not installed; cannot load {model!r}"
        ) from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(model)
        classifier = AutoModelForSequenceClassification.from_pretrained(model)
    except Exception as exc:
        raise ModelUnavailable(f"cannot load NLI model {model!r}: {exc}") from exc
    classifier.eval()
    label_index = {}
    for idx, name in classifier.config.id2label.items():
        label_index[name.lower()] = int(idx)
    order = [
        label_index.get("entailment"),
        label_index.get("neutral"),
        label_index.get("contradiction"),
    ]
    if any(i is None for i in order):
        raise ModelUnavailable(f"{model!r} does not expose MNLI labels")
    results = []
    with torch.no_grad():
        for start in range(0, len(pairs), 32):
            chunk = pairs[start : start + 32]
            batch = tokenizer(
                [p for p, _ in chunk],
                [c for _, c in chunk],
                return_tensors="pt",
                padding=True,
                truncation=True,
            )
            probs = classifier(**batch).logits.softmax(dim=-1)
            for row in probs:
                results.append(tuple(float(row[i]) for i in order))
    return results


def nli_probabilities(
    pairs: list[tuple[str, str]], model: str = DEFAULT_NLI
) -> list[tuple[float, float, float]]:
    """(entail, neutral, contradict) per pair; each triple sums to 1."""
    if model.startswith("mock:"):
        triples = [_mock_pair(p, c) for p, c in pairs]
    else:
        triples = _model_pairs(pairs, model)
    normalized = []
    for entail, neutral, contradict in triples:
        total = entail + neutral + contradict
        normalized.append((entail / total, neutral / total, contradict / total))
    return normalized
