"""Command-line pipeline: index, verbalize, embed, extract, prune, features, eval.

Each stage is a pure function of its inputs plus recorded configuration;
outputs land in a directory with a manifest of the config and input
checksums. Files are written to a temp name and renamed, so failures
leave no half-written outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import multiprocessing
import os
import re
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .embeddings import load_embeddings, mock_encode_many, save_embeddings
from .estimators import CckgExtractor, CckgFeaturizer, CckgPruner
from .extract import Cckg
from .features import export_matrix
from .kg import KnowledgeGraph, load_kg, normalize_label, SNAPSHOT_MAGIC
from .metrics import evaluate_corpus
from .verbalize import builtin_templates, load_templates, verbalize_all

JSON_SUFFIX = ".cckg.json"


class CliError(Exception):
    """User-facing command failure with an actionable message."""


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _atomic_write(path: Path, data: str | bytes) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    kwargs = {} if isinstance(data, bytes) else {"encoding": "utf-8"}
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **kwargs) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _input_records(inputs: list[Path]) -> list[dict]:
    # Basenames, not absolute paths, so reruns from other directories still
    # produce byte-identical manifests; the checksum is the identity.
    return [{"name": p.name, "sha256": _sha256(p)} for p in inputs]


def _write_manifest(out_dir: Path, command: str, config: dict, inputs: list[Path]) -> None:
    manifest = {
        "tool": f"cckg {__version__}",
        "command": command,
        "config": config,
        "inputs": _input_records(inputs),
    }
    _atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_kg_any(path: str, exclude: list[str]) -> KnowledgeGraph:
    p = Path(path)
    if not p.exists():
        raise CliError(f"KG file not found: {p}")
    with open(p, "rb") as fh:
        magic = fh.read(4)
    if magic == SNAPSHOT_MAGIC:
        if exclude:
            raise CliError("--exclude-relation applies when loading a TSV, not a snapshot")
        return KnowledgeGraph.load_snapshot(p)
    return load_kg(p, exclude)


def _resolve_templates(name_or_path: str, style: str):
    if name_or_path in ("conceptnet", "explaknow"):
        return builtin_templates(name_or_path, style)
    return load_templates(name_or_path, style)


def _read_queries(path: Path) -> list[dict]:
    queries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CliError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if "premise" not in obj or "conclusion" not in obj:
                raise CliError(f"{path}:{lineno}: query needs premise and conclusion")
            obj["id"] = str(obj.get("id", f"q{lineno:05d}"))
            if not re.fullmatch(r"[A-Za-z0-9._-]+", obj["id"]):
                raise CliError(
                    f"{path}:{lineno}: query id {obj['id']!r} is not filename-safe"
                )
            queries.append(obj)
    if not queries:
        raise CliError(f"{path}: no queries")
    ids = [q["id"] for q in queries]
    if len(set(ids)) != len(ids):
        raise CliError(f"{path}: duplicate query ids")
    return queries


def _read_nli(path: Path) -> dict[str, tuple[float, float, float]]:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            table[str(obj["id"])] = (
                float(obj["entail"]),
                float(obj["neutral"]),
                float(obj["contradict"]),
            )
    return table


def _cckg_files(directory: Path) -> list[Path]:
    files = sorted(directory.glob(f"*{JSON_SUFFIX}"))
    if not files:
        raise CliError(f"{directory}: no {JSON_SUFFIX} files")
    return files


def _dump_cckg(cckg: Cckg) -> str:
    return json.dumps(cckg.to_json_dict(), indent=2) + "\n"


# --- subcommands ---------------------------------------------------------------


def cmd_index(args) -> int:
    kg = load_kg(args.kg, args.exclude_relation)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".tmp")
    kg.save_snapshot(tmp)
    os.replace(tmp, out)
    manifest = {
        "tool": f"cckg {__version__}",
        "command": "index",
        "config": {"exclude_relations": sorted(args.exclude_relation)},
        "inputs": _input_records([Path(args.kg)]),
        "stats": {
            "concepts": kg.n_concepts,
            "relations": kg.n_relations,
            "triplets": kg.n_triplets,
        },
    }
    _atomic_write(Path(str(out) + ".manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"indexed {kg.n_concepts} concepts, {kg.n_triplets} triplets -> {out}")
    return 0


def cmd_verbalize(args) -> int:
    kg = _load_kg_any(args.kg, args.exclude_relation)
    templates = _resolve_templates(args.templates, args.style)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    count = verbalize_all(kg, templates, out)
    print(f"wrote {count} sentences -> {out}")
    return 0


def cmd_embed(args) -> int:
    sentences = Path(args.sentences).read_text(encoding="utf-8").splitlines()
    if not sentences:
        raise CliError(f"{args.sentences}: no sentences")
    matrix = mock_encode_many(sentences, args.dim)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_embeddings(matrix, out, source=f"{args.sentences}:{len(sentences)}")
    print(f"embedded {matrix.rows} sentences at dim {matrix.dim} -> {out}")
    return 0


_WORKER_EXTRACTOR: CckgExtractor | None = None
_WORKER_QUERIES: list[dict] = []


def _extract_worker(index: int) -> tuple[str, str]:
    query = _WORKER_QUERIES[index]
    cckg = _WORKER_EXTRACTOR.extract_one(query)
    return query["id"], _dump_cckg(cckg)


def _run_parallel(worker, count: int, jobs: int) -> list:
    if jobs <= 1:
        return [worker(i) for i in range(count)]
    # Workers read module-level state; fork keeps it shared without pickling.
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
        return list(pool.map(worker, range(count)))


def cmd_extract(args) -> int:
    global _WORKER_EXTRACTOR, _WORKER_QUERIES
    kg = _load_kg_any(args.kg, args.exclude_relation)
    queries = _read_queries(Path(args.queries))
    inputs = [Path(args.kg), Path(args.queries)]

    if args.encoder == "files":
        if not args.embeddings:
            raise CliError("--encoder files requires --embeddings")
        triplet_emb = load_embeddings(args.embeddings)
        inputs.append(Path(args.embeddings))
        if triplet_emb.rows != kg.n_triplets:
            raise CliError(
                f"embedding rows ({triplet_emb.rows}) do not match KG triplets "
                f"({kg.n_triplets}): alignment error"
            )
        if not args.query_embeddings:
            raise CliError("--encoder files requires --query-embeddings")
        query_emb = load_embeddings(args.query_embeddings)
        inputs.append(Path(args.query_embeddings))
        if query_emb.rows != 3 * len(queries):
            raise CliError(
                f"query embedding rows ({query_emb.rows}) must be 3 per query "
                f"({3 * len(queries)}): alignment error"
            )
        for i, query in enumerate(queries):
            query["embedding_p"] = query_emb.data[3 * i]
            query["embedding_c"] = query_emb.data[3 * i + 1]
            query["embedding_a"] = query_emb.data[3 * i + 2]
        span_rows = sum(len(q.get("constituents") or ()) for q in queries)
        if span_rows:
            if not args.constituent_embeddings:
                raise CliError(
                    "queries carry constituents; --encoder files requires "
                    "--constituent-embeddings (one row per span in file order)"
                )
            span_emb = load_embeddings(args.constituent_embeddings)
            inputs.append(Path(args.constituent_embeddings))
            if span_emb.rows != span_rows:
                raise CliError(
                    f"constituent embedding rows ({span_emb.rows}) do not match "
                    f"span count ({span_rows}): alignment error"
                )
            row = 0
            for query in queries:
                for span in query.get("constituents") or ():
                    span["embedding"] = span_emb.data[row]
                    row += 1
    elif args.encoder == "mock":
        templates = _resolve_templates(args.templates, args.style)
        from .verbalize import verbalize_sentences

        sentences = verbalize_sentences(kg, templates)
        triplet_emb = mock_encode_many(sentences, args.dim)
    else:
        raise CliError(f"unknown encoder {args.encoder!r}")

    extractor = CckgExtractor(
        kg=kg,
        triplet_embeddings=triplet_emb,
        encoder="mock",
        dim=triplet_emb.dim,
        m=args.m,
        k=args.k,
        mode=args.mode.replace("-", "_"),
        pairs=args.pairs,
        seed=args.seed,
    ).fit()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1:
        kg.fast_adjacency()  # build once pre-fork so workers share the pages
    _WORKER_EXTRACTOR = extractor
    _WORKER_QUERIES = queries
    results = _run_parallel(_extract_worker, len(queries), args.jobs)
    for arg_id, payload in sorted(results):
        _atomic_write(out_dir / f"{arg_id}{JSON_SUFFIX}", payload)
    config = {
        "m": args.m,
        "k": args.k,
        "mode": args.mode.replace("-", "_"),
        "pairs": args.pairs,
        "seed": args.seed,
        "encoder": args.encoder,
        "dim": triplet_emb.dim,
        "exclude_relations": sorted(args.exclude_relation),
        "templates": args.templates,
        "style": args.style,
    }
    _write_manifest(out_dir, "extract", config, inputs)
    print(f"extracted {len(results)} CCKGs -> {out_dir}")
    return 0


_WORKER_PRUNER: CckgPruner | None = None
_WORKER_GRAPH_FILES: list[Path] = []


def _prune_worker(index: int) -> tuple[str, str]:
    path = _WORKER_GRAPH_FILES[index]
    cckg = Cckg.from_json_dict(json.loads(path.read_text(encoding="utf-8")))
    pruned = _WORKER_PRUNER.prune_one(cckg)
    return path.name, _dump_cckg(pruned)


def _query_vector_table(
    queries_path: str, embeddings_path: str
) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Map query id -> (P, C, A) vectors from the 3-rows-per-query EMB1 file."""
    queries = _read_queries(Path(queries_path))
    emb = load_embeddings(embeddings_path)
    if emb.rows != 3 * len(queries):
        raise CliError(
            f"query embedding rows ({emb.rows}) must be 3 per query "
            f"({3 * len(queries)}): alignment error"
        )
    return {
        q["id"]: (emb.data[3 * i], emb.data[3 * i + 1], emb.data[3 * i + 2])
        for i, q in enumerate(queries)
    }


def cmd_prune(args) -> int:
    global _WORKER_PRUNER, _WORKER_GRAPH_FILES
    in_dir = Path(args.input)
    files = _cckg_files(in_dir)

    argument_vectors = None
    if args.query_embeddings:
        if not args.queries:
            raise CliError("--query-embeddings requires --queries for id alignment")
        table = _query_vector_table(args.queries, args.query_embeddings)
        argument_vectors = {qid: vecs[2] for qid, vecs in table.items()}

    concept_embedder = None
    if args.concept_embeddings:
        if not args.kg:
            raise CliError("--concept-embeddings requires --kg for label alignment")
        if not args.query_embeddings:
            raise CliError(
                "--concept-embeddings requires --queries/--query-embeddings so "
                "concepts and arguments share one encoder"
            )
        kg = _load_kg_any(args.kg, [])
        concept_emb = load_embeddings(args.concept_embeddings)
        if concept_emb.rows != kg.n_concepts:
            raise CliError(
                f"concept embedding rows ({concept_emb.rows}) do not match "
                f"KG concepts ({kg.n_concepts}): alignment error"
            )
        index = {label: i for i, label in enumerate(kg.concept_labels)}
        data = concept_emb.data

        def concept_embedder(text: str) -> np.ndarray:
            row = index.get(normalize_label(text))
            if row is None:
                raise CliError(f"no concept embedding for {text!r}")
            return data[row]

    pruner = CckgPruner(
        ranker=args.ranker,
        fraction=args.fraction,
        encoder="mock",
        dim=args.dim,
        concept_embedder=concept_embedder,
        argument_vectors=argument_vectors,
    ).fit()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _WORKER_PRUNER = pruner
    _WORKER_GRAPH_FILES = files
    results = _run_parallel(_prune_worker, len(files), args.jobs)
    for name, payload in sorted(results):
        _atomic_write(out_dir / name, payload)
    config = {
        "ranker": args.ranker,
        "fraction": args.fraction,
        "dim": args.dim,
    }
    _write_manifest(out_dir, "prune", config, files)
    print(f"pruned {len(results)} CCKGs -> {out_dir}")
    return 0


def cmd_features(args) -> int:
    in_dir = Path(args.input)
    files = _cckg_files(in_dir)
    nli = _read_nli(Path(args.nli)) if args.nli else None
    query_vectors = None
    if args.query_embeddings:
        if not args.queries:
            raise CliError("--query-embeddings requires --queries for id alignment")
        table = _query_vector_table(args.queries, args.query_embeddings)
        query_vectors = {qid: (vecs[0], vecs[1]) for qid, vecs in table.items()}
    featurizer = CckgFeaturizer(
        encoder="mock", dim=args.dim, nli=nli, query_vectors=query_vectors
    ).fit()
    rows = []
    for path in files:
        cckg = Cckg.from_json_dict(json.loads(path.read_text(encoding="utf-8")))
        arg_id = cckg.meta.get("id", path.name[: -len(JSON_SUFFIX)])
        vector = featurizer.featurize_one(cckg)
        rows.append((arg_id, vector))
    rows.sort(key=lambda item: item[0])
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = out_dir / ".features.csv.tmp"
    count = export_matrix(rows, tmp)
    os.replace(tmp, out_dir / "features.csv")
    inputs = list(files) + ([Path(args.nli)] if args.nli else [])
    _write_manifest(out_dir, "features", {"dim": args.dim}, inputs)
    print(f"wrote {count} feature rows -> {out_dir / 'features.csv'}")
    return 0


def cmd_eval(args) -> int:
    templates = _resolve_templates(args.templates, args.style)
    report = evaluate_corpus(
        args.pred, args.gold, templates, ged_timeout=args.ged_timeout
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = report.render_table()
    _atomic_write(out_dir / "report.txt", table)
    tmp = out_dir / ".report.csv.tmp"
    report.write_csv(tmp)
    os.replace(tmp, out_dir / "report.csv")
    config = {
        "templates": args.templates,
        "style": args.style,
        "ged_timeout": args.ged_timeout,
    }
    inputs = sorted(
        p
        for d in (args.pred, args.gold)
        for p in Path(d).iterdir()
        if p.suffix in (".tsv", ".json")
    )
    _write_manifest(out_dir, "eval", config, inputs)
    print(table, end="")
    return 0


def cmd_export_dot(args) -> int:
    in_dir = Path(args.input)
    files = _cckg_files(in_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in files:
        cckg = Cckg.from_json_dict(json.loads(path.read_text(encoding="utf-8")))
        name = path.name[: -len(JSON_SUFFIX)] + ".dot"
        _atomic_write(out_dir / name, cckg.to_dot())
    _write_manifest(out_dir, "export-dot", {}, files)
    print(f"wrote {len(files)} DOT files -> {out_dir}")
    return 0


# --- argument parsing ----------------------------------------------------------


def _add_kg_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kg", required=True, help="KG TSV file or CKG1 snapshot")
    parser.add_argument(
        "--exclude-relation",
        action="append",
        default=[],
        metavar="NAME",
        help="drop triplets with this relation (repeatable; TSV input only)",
    )


def _add_template_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--templates",
        default="conceptnet",
        help="builtin family (conceptnet, explaknow) or a template TSV path",
    )
    parser.add_argument("--style", choices=("natural", "static"), default="natural")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cckg",
        description="Contextualized commonsense knowledge graph extraction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="index a KG TSV into a binary snapshot")
    _add_kg_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("verbalize", help="write one sentence per triplet")
    _add_kg_args(p)
    _add_template_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_verbalize)

    p = sub.add_parser("embed", help="mock-encode a sentences file to EMB1")
    p.add_argument("--sentences", required=True)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="extract one CCKG per query")
    _add_kg_args(p)
    _add_template_args(p)
    p.add_argument("--queries", required=True, help="JSONL of {id, premise, conclusion}")
    p.add_argument("-m", type=int, default=1, help="top triplets per side")
    p.add_argument("-k", type=int, default=1, help="paths per anchor pair")
    p.add_argument("--pairs", choices=("all", "cross"), default="all")
    p.add_argument(
        "--mode",
        choices=("weighted", "unweighted-one", "unweighted-all"),
        default="weighted",
    )
    p.add_argument("--encoder", choices=("mock", "files"), default="mock")
    p.add_argument("--embeddings", help="triplet EMB1 file (encoder=files)")
    p.add_argument(
        "--query-embeddings",
        help="EMB1 with rows P,C,A per query in file order (encoder=files)",
    )
    p.add_argument(
        "--constituent-embeddings",
        help="EMB1 with one row per constituent span in file order (encoder=files)",
    )
    p.add_argument("--dim", type=int, default=128, help="mock encoder dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("prune", help="prune extracted CCKGs")
    p.add_argument("--in", dest="input", required=True, help="directory of CCKG JSON")
    p.add_argument("--ranker", choices=("similarity", "pagerank"), default="similarity")
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--kg", help="KG (for --concept-embeddings alignment)")
    p.add_argument("--concept-embeddings", help="EMB1 aligned to KG concept ids")
    p.add_argument("--queries", help="query JSONL (with --query-embeddings)")
    p.add_argument(
        "--query-embeddings", help="EMB1 with rows P,C,A per query in file order"
    )
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("features", help="write the 19-column feature CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--nli", help="JSONL of {id, entail, neutral, contradict}")
    p.add_argument("--queries", help="query JSONL (with --query-embeddings)")
    p.add_argument(
        "--query-embeddings", help="EMB1 with rows P,C,A per query in file order"
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("eval", help="score predicted graphs against gold graphs")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    _add_template_args(p)
    p.add_argument("--ged-timeout", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-dot", help="render CCKG JSON as DOT")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_dot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # KgError, TemplateError, EmbeddingError, ...
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
