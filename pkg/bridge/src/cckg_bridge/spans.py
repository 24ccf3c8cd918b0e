"""Constituency span extraction.

The real backend runs a CRF constituency parser over each text and emits
every constituent span with a leaf flag; the engine ignores leaves.
``mock:chunk`` is a deterministic punctuation/conjunction chunker for
offline format testing.
"""

from __future__ import annotations

import re

DEFAULT_PARSER = "crf-con-roberta-en"

_SPLIT = re.compile(r",|;|:| and | but | or | because | while | although ")


class ModelUnavailable(RuntimeError):
    pass


def _mock_spans(text: str) -> list[dict]:
    spans: list[dict] = []
    words = text.split()
    chunks = [c.strip() for c in _SPLIT.split(text) if c.strip()]
    for chunk in chunks:
        if len(chunk.split()) > 1:
            spans.append({"text": chunk, "is_leaf": False})
    for word in words:
        spans.append({"text": word, "is_leaf": True})
    return spans


def _parser_spans(texts: list[str], model: str) -> list[list[dict]]:
    try:
        from supar import Parser
    except ImportError as exc:
        raise ModelUnavailable(
            f"supar is not installed; cannot load constituency parser {model!r}"
        ) from exc
    try:
        parser = Parser.load(model)
    except Exception as exc:
        raise ModelUnavailable(f"cannot load parser {model!r}: {exc}") from exc
    out: list[list[dict]] = []
    for text in texts:
        words = text.split()
        dataset = parser.predict([words], verbose=False)
        tree = dataset.trees[0]
        spans: list[dict] = []
        for subtree in tree.subtrees():
            leaves = subtree.leaves()
            spans.append(
                {"text": " ".join(leaves), "is_leaf": len(leaves) <= 1}
            )
        out.append(spans)
    return out


def constituent_spans(
    texts: list[str], model: str = DEFAULT_PARSER
) -> list[list[dict]]:
    """Constituent spans with leaf flags, one list per input text."""
    if model.startswith("mock:"):
        return [_mock_spans(t) for t in texts]
    return _parser_spans(texts, model)
