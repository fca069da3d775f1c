"""Operator command line: build indices, run queries, evaluate, inspect.

Exit codes: 0 success, 2 input error (bad corpus line, missing file,
invalid config, missing judgment), 3 provider or runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

from . import errors
from .embed import DEFAULT_DIM, HttpEmbedClient, SyntheticEncoder
from .evaluation import (load_qrels_tsv, load_queries_jsonl, load_run_tsv,
                         mrr_at_10, recall_at_10)
from .indexer import CorpusFormatError, build_index, read_corpus_jsonl
from .induction import InductionConfig
from .persist import load_index, save_index
from .retrieval import QueryConfig, format_run_lines, retrieve, write_run_file
from .textpipe import ChunkingConfig, load_stopwords

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3


@dataclass
class AppConfig:
    """Flat-key JSON configuration covering every tunable.

    Keys are dotted, for example ``{"chunking.chunk_size": 24,
    "induction.tau_disp": 0.9, "query.mix_lambda": 0.5,
    "provider.kind": "synthetic"}``. Unknown keys are rejected.
    """

    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    induction: InductionConfig = field(default_factory=InductionConfig)
    query: QueryConfig = field(default_factory=QueryConfig)
    provider_kind: str = "synthetic"
    provider_url: str = ""
    provider_timeout: float = 30.0
    provider_max_inflight: int = 8
    provider_seed: int = 42
    provider_dim: int = DEFAULT_DIM
    provider_gamma: float = 1.0


_PROVIDER_KEYS = {
    "provider.kind": ("provider_kind", str),
    "provider.url": ("provider_url", str),
    "provider.timeout": ("provider_timeout", float),
    "provider.max_inflight": ("provider_max_inflight", int),
    "provider.seed": ("provider_seed", int),
    "provider.dim": ("provider_dim", int),
    "provider.gamma": ("provider_gamma", float),
}


def load_app_config(path: str | None) -> AppConfig:
    raw = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise errors.ConfigError("config file must contain a JSON object")

    sections = {"chunking": {}, "induction": {}, "query": {}}
    provider = {}
    stopword_path = None
    for key, value in raw.items():
        if key == "chunking.stopword_list":
            stopword_path = str(value)
            continue
        if key in _PROVIDER_KEYS:
            attr, cast = _PROVIDER_KEYS[key]
            provider[attr] = cast(value)
            continue
        section, _, name = key.partition(".")
        if section not in sections or not name:
            raise errors.ConfigError(f"unknown config key {key!r}")
        sections[section][name] = value

    def build(cls, values, extra=None):
        valid = {f.name for f in fields(cls)}
        unknown = set(values) - valid
        if unknown:
            raise errors.ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(values)
        if extra:
            kwargs.update(extra)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise errors.ConfigError(str(exc)) from exc

    extra = {"stopwords": load_stopwords(stopword_path)} if stopword_path else None
    cfg = AppConfig(
        chunking=build(ChunkingConfig, sections["chunking"], extra),
        induction=build(InductionConfig, sections["induction"]),
        query=build(QueryConfig, sections["query"]),
    )
    for attr, value in provider.items():
        setattr(cfg, attr, value)
    if cfg.provider_kind not in ("synthetic", "http"):
        raise errors.ConfigError(f"unknown provider kind {cfg.provider_kind!r}")
    if cfg.provider_kind == "http" and not cfg.provider_url:
        raise errors.ConfigError("provider.kind is http but provider.url is empty")
    return cfg


def make_provider(cfg: AppConfig):
    if cfg.provider_kind == "http":
        return HttpEmbedClient(cfg.provider_url, cfg.provider_timeout,
                               cfg.provider_max_inflight)
    return SyntheticEncoder(cfg.provider_seed, cfg.provider_dim, cfg.provider_gamma)


# ---------------------------------------------------------------------------
# subcommands


def cmd_index(args) -> int:
    cfg = load_app_config(args.config)
    if args.provider:
        cfg.provider_kind = args.provider
    if args.seed is not None:
        cfg.provider_seed = args.seed
    provider = make_provider(cfg)

    try:
        docs = read_corpus_jsonl(args.corpus)
    except CorpusFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: cannot read corpus: {exc}", file=sys.stderr)
        return EXIT_INPUT

    t0 = time.perf_counter()
    try:
        graph, stats = build_index(docs, provider, cfg.chunking, cfg.induction,
                                   jobs=args.jobs)
    except (errors.ProviderUnavailable, errors.DimensionMismatch) as exc:
        print(f"error: provider failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    elapsed = time.perf_counter() - t0

    save_index(graph, args.out)
    ait = elapsed / len(docs) if docs else 0.0
    if args.timings_out:
        with open(args.timings_out, "w", encoding="utf-8") as fh:
            json.dump({"ait_s": round(ait, 3), "num_docs": len(docs)}, fh)
    print(json.dumps({
        "docs": stats.docs,
        "chunks": stats.chunks,
        "tokens": stats.tokens,
        "semantic_nodes": stats.semantic_nodes,
        "multi_sense_tokens": stats.multi_sense_tokens,
        "ait_s": round(ait, 3),
    }))
    return EXIT_OK


def cmd_query(args) -> int:
    cfg = load_app_config(args.config)
    try:
        graph = load_index(args.index)
    except OSError as exc:
        print(f"error: cannot read index: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (errors.IndexCorrupt, errors.VersionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    meta = graph.provider_meta
    if meta is not None and meta.kind == "synthetic":
        provider = SyntheticEncoder(meta.seed, meta.dim, meta.gamma)
    elif meta is not None and meta.kind == "http":
        provider = HttpEmbedClient(cfg.provider_url or meta.url,
                                   cfg.provider_timeout, cfg.provider_max_inflight)
    else:
        provider = make_provider(cfg)

    def run_one(text: str):
        return retrieve(text, args.k, graph, provider, cfg.chunking, cfg.query)

    try:
        if args.text is not None:
            result = run_one(args.text)
            for line in format_run_lines("q0", result):
                print(line)
            return EXIT_OK

        queries = load_queries_jsonl(args.queries)

        def timed(item):
            query_id, text = item
            t0 = time.perf_counter()
            result = run_one(text)
            return query_id, result, time.perf_counter() - t0

        # queries are read-only over the immutable index; order of the
        # output is fixed by the input order regardless of worker count
        if queries:
            with ThreadPoolExecutor(max_workers=min(8, os.cpu_count() or 1)) as pool:
                timed_results = list(pool.map(timed, queries))
        else:
            timed_results = []
        results = [(qid, result) for qid, result, _ in timed_results]
        durations = [seconds for _, _, seconds in timed_results]
        write_run_file(args.out, results)
        aqt = sum(durations) / len(durations) if durations else 0.0
        if args.timings_out:
            with open(args.timings_out, "w", encoding="utf-8") as fh:
                json.dump({"aqt_s": round(aqt, 3), "num_queries": len(queries)}, fh)
        print(json.dumps({"queries": len(queries), "aqt_s": round(aqt, 3)}))
        return EXIT_OK
    except errors.EmptyIndex as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (errors.ProviderUnavailable, errors.DimensionMismatch) as exc:
        print(f"error: provider failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def cmd_eval(args) -> int:
    try:
        run = load_run_tsv(args.run)
        qrels = load_qrels_tsv(args.qrels)
        graph = load_index(args.index)
    except (OSError, ValueError, errors.IndexCorrupt, errors.VersionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        metrics = {
            "recall_at_10": recall_at_10(run, qrels),
            "mrr_at_10": mrr_at_10(run, qrels),
            "num_queries": len(run.queries),
            "num_docs": len(graph.docs),
        }
    except errors.MissingJudgment as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.timings:
        for path in args.timings:
            try:
                with open(path, encoding="utf-8") as fh:
                    timing = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                print(f"error: cannot read timings {path}: {exc}", file=sys.stderr)
                return EXIT_INPUT
            for key in ("ait_s", "aqt_s"):
                if key in timing:
                    metrics[key] = timing[key]
    print(json.dumps(metrics))
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        graph = load_index(args.index)
    except (OSError, errors.IndexCorrupt, errors.VersionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(graph.summary()))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semgraph",
        description="semantic-aware graph retrieval over a four-layer index")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build an index from a JSONL corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--provider", choices=["synthetic", "http"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--timings-out", default=None)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="run queries against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", default=None)
    p.add_argument("--text", default=None, help="single inline query to stdout")
    p.add_argument("--config", default=None)
    p.add_argument("--timings-out", default=None)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="score a run file against judgments")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--timings", action="append", default=None,
                   help="timing sidecar JSON written by index/query (repeatable)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="print index summary")
    p.add_argument("--index", required=True)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "query" and args.text is None:
        if not args.queries or not args.out:
            parser.error("query requires --queries and --out (or --text)")
    try:
        return args.func(args)
    except errors.ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
