"""File-based model bridge for the CCKG engine.

Produces sentence embeddings (EMB1), NLI probabilities (JSONL) and
constituency spans (JSONL) that the engine consumes through its file
interfaces. Model identifiers are configuration; ``mock:`` identifiers
select deterministic offline stand-ins for format testing.
"""

__version__ = "0.1.0"

from .emb1 import load_emb1, write_emb1
from .encode import DEFAULT_ENCODER, encode_texts
from .nli import DEFAULT_NLI, nli_probabilities
from .spans import DEFAULT_PARSER, constituent_spans

__all__ = [
    "DEFAULT_ENCODER",
    "DEFAULT_NLI",
    "DEFAULT_PARSER",
    "constituent_spans",
    "encode_texts",
    "load_emb1",
    "nli_probabilities",
    "write_emb1",
]
