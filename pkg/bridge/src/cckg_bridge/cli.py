"""Bridge CLI: batch jobs turning text inputs into EMB1/JSONL files.

Jobs: embed-sentences (line-per-sentence file), embed-texts (query JSONL
to P, C, A rows per query), embed-constituents (one row per span), nli
(query JSONL to probability JSONL), constituents (query JSONL to span
JSONL). Every output directory gets a manifest recording the model id.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .emb1 import write_emb1
from .encode import DEFAULT_ENCODER, encode_texts
from .nli import DEFAULT_NLI, nli_probabilities
from .spans import DEFAULT_PARSER, constituent_spans


class BridgeError(Exception):
    pass


def _read_queries(path: Path) -> list[dict]:
    queries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "premise" not in obj or "conclusion" not in obj:
                raise BridgeError(f"{path}:{lineno}: need premise and conclusion")
            obj.setdefault("id", f"q{lineno:05d}")
            queries.append(obj)
    if not queries:
        raise BridgeError(f"{path}: no queries")
    return queries


def _write_manifest(out: Path, job: str, model: str, rows: int) -> None:
    manifest = {"job": job, "model": model, "rows": rows}
    Path(str(out) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def cmd_embed_sentences(args) -> int:
    sentences = Path(args.input).read_text(encoding="utf-8").splitlines()
    if not sentences:
        raise BridgeError(f"{args.input}: empty input")
    vectors = encode_texts(sentences, args.model)
    write_emb1(vectors, args.out, source=f"{args.input}:{len(sentences)}")
    _write_manifest(Path(args.out), "embed-sentences", args.model, len(sentences))
    print(f"embedded {len(sentences)} sentences -> {args.out}")
    return 0


def cmd_embed_texts(args) -> int:
    queries = _read_queries(Path(args.input))
    texts: list[str] = []
    for q in queries:
        texts.extend(
            [q["premise"], q["conclusion"], f"{q['premise']} {q['conclusion']}"]
        )
    vectors = encode_texts(texts, args.model)
    write_emb1(vectors, args.out, source=f"{args.input}:3x{len(queries)}")
    _write_manifest(Path(args.out), "embed-texts", args.model, len(texts))
    print(f"embedded {len(queries)} queries (P, C, A rows) -> {args.out}")
    return 0


def cmd_embed_constituents(args) -> int:
    texts: list[str] = []
    with open(args.input, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            for span in obj.get("spans", obj.get("constituents", [])):
                texts.append(span["text"])
    if not texts:
        raise BridgeError(f"{args.input}: no constituent spans")
    vectors = encode_texts(texts, args.model)
    write_emb1(vectors, args.out, source=f"{args.input}:{len(texts)} spans")
    _write_manifest(Path(args.out), "embed-constituents", args.model, len(texts))
    print(f"embedded {len(texts)} spans -> {args.out}")
    return 0


def cmd_nli(args) -> int:
    queries = _read_queries(Path(args.input))
    triples = nli_probabilities(
        [(q["premise"], q["conclusion"]) for q in queries], args.model
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        for q, (entail, neutral, contradict) in zip(queries, triples):
            fh.write(
                json.dumps(
                    {
                        "id": q["id"],
                        "entail": entail,
                        "neutral": neutral,
                        "contradict": contradict,
                    }
                )
                + "\n"
            )
    _write_manifest(Path(args.out), "nli", args.model, len(queries))
    print(f"scored {len(queries)} pairs -> {args.out}")
    return 0


def cmd_constituents(args) -> int:
    queries = _read_queries(Path(args.input))
    texts: list[str] = []
    for q in queries:
        texts.extend([q["premise"], q["conclusion"]])
    parsed = constituent_spans(texts, args.model)
    with open(args.out, "w", encoding="utf-8") as fh:
        for i, q in enumerate(queries):
            spans = []
            for span in parsed[2 * i]:
                spans.append({**span, "side": "premise"})
            for span in parsed[2 * i + 1]:
                spans.append({**span, "side": "conclusion"})
            fh.write(json.dumps({"id": q["id"], "spans": spans}) + "\n")
    _write_manifest(Path(args.out), "constituents", args.model, len(queries))
    print(f"parsed {len(queries)} queries -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cckg-bridge", description="model bridge producing EMB1/JSONL files"
    )
    sub = parser.add_subparsers(dest="job", required=True)

    specs = [
        ("embed-sentences", cmd_embed_sentences, DEFAULT_ENCODER,
         "newline-delimited sentences -> EMB1, row i = line i"),
        ("embed-texts", cmd_embed_texts, DEFAULT_ENCODER,
         "query JSONL -> EMB1 with P, C, A rows per query"),
        ("embed-constituents", cmd_embed_constituents, DEFAULT_ENCODER,
         "constituent JSONL -> EMB1, one row per span in file order"),
        ("nli", cmd_nli, DEFAULT_NLI,
         "query JSONL -> JSONL of entail/neutral/contradict"),
        ("constituents", cmd_constituents, DEFAULT_PARSER,
         "query JSONL -> JSONL of constituent spans with leaf flags"),
    ]
    for name, func, default_model, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--model", default=default_model)
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
