"""Retrieval metrics over run files and relevance judgments.

Gold matching is at document level: a retrieved chunk counts when its
parent document is gold, and duplicate chunks from one gold document
count it once. Recall@10 is micro-averaged (summed hits over summed gold
counts across queries); MRR@10 averages the reciprocal rank of the first
gold hit, zero when the top 10 contain none.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import errors


@dataclass
class RunEntry:
    chunk_id: int
    doc_id: str
    rank: int
    score: float


@dataclass
class RunFile:
    queries: dict[str, list[RunEntry]] = field(default_factory=dict)


@dataclass
class Qrels:
    gold: dict[str, set[str]] = field(default_factory=dict)


CUTOFF = 10


def recall_at_10(run: RunFile, qrels: Qrels) -> float:
    """Micro-averaged fraction of gold documents found in the top 10."""
    hits = 0
    total = 0
    for query_id, entries in run.queries.items():
        gold = qrels.gold.get(query_id)
        if gold is None:
            raise errors.MissingJudgment(query_id)
        top_docs = {e.doc_id for e in entries if e.rank <= CUTOFF}
        hits += len(top_docs & gold)
        total += len(gold)
    return hits / total if total else 0.0


def mrr_at_10(run: RunFile, qrels: Qrels) -> float:
    """Mean reciprocal rank of the first gold document in the top 10."""
    if not run.queries:
        return 0.0
    total = 0.0
    for query_id, entries in run.queries.items():
        gold = qrels.gold.get(query_id)
        if gold is None:
            raise errors.MissingJudgment(query_id)
        rr = 0.0
        for e in sorted(entries, key=lambda e: e.rank):
            if e.rank > CUTOFF:
                break
            if e.doc_id in gold:
                rr = 1.0 / e.rank
                break
        total += rr
    return total / len(run.queries)


def timing_report(events) -> dict:
    """Mean wall-clock seconds per phase, 3 decimals.

    ``events`` is a list of (phase, seconds) with phases "index" (one per
    document) and "query" (one per query). Phases with no events are
    absent from the report rather than zero.
    """
    sums: dict[str, list[float]] = {}
    for phase, duration in events:
        sums.setdefault(phase, []).append(float(duration))
    report = {}
    if "index" in sums:
        report["ait_s"] = round(sum(sums["index"]) / len(sums["index"]), 3)
    if "query" in sums:
        report["aqt_s"] = round(sum(sums["query"]) / len(sums["query"]), 3)
    return report


# ---------------------------------------------------------------------------
# file formats


def load_qrels_tsv(path: str) -> Qrels:
    """TSV ``query_id  doc_id  relevance``; relevance > 0 marks gold.

    A BEIR-style header line is skipped when its last column is not
    numeric. Every resulting gold set is nonempty by construction.
    """
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"qrels line {line_no}: expected 3 columns, got {len(parts)}")
            query_id, doc_id, rel = parts
            try:
                relevance = float(rel)
            except ValueError:
                if line_no == 1:
                    continue  # header
                raise ValueError(f"qrels line {line_no}: non-numeric relevance {rel!r}")
            if relevance > 0:
                qrels.gold.setdefault(query_id, set()).add(doc_id)
    return qrels


def load_run_tsv(path: str) -> RunFile:
    """Run file written by the retrieval engine:
    ``query_id  chunk_id  doc_id  rank  score  stage`` per line."""
    run = RunFile()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise ValueError(f"run line {line_no}: expected 6 columns, got {len(parts)}")
            query_id, chunk_id, doc_id, rank, score, _stage = parts
            run.queries.setdefault(query_id, []).append(
                RunEntry(int(chunk_id), doc_id, int(rank), float(score)))
    for query_id, entries in run.queries.items():
        ranks = [e.rank for e in entries]
        if ranks != list(range(1, len(ranks) + 1)):
            raise ValueError(f"query {query_id}: ranks are not contiguous from 1")
    return run


def load_queries_jsonl(path: str) -> list[tuple[str, str]]:
    """JSON-lines ``{"query_id": ..., "text": ...}`` per line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append((str(obj["query_id"]), str(obj["text"])))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"queries line {line_no}: {exc}") from exc
    return out
