"""Corpus ingestion: chunk, extract, embed, and induce into a graph.

Per-document work (splitting, extraction, embedding) is independent and
can run on a thread pool; graph mutation and induction stay sequential in
document order so the resulting index is identical regardless of the
worker count.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import errors
from .embed import EmbedRequest
from .graph import SemanticGraph
from .induction import BatchItem, EmbeddingBatch, InductionConfig, induce_semantic_nodes
from .textpipe import ChunkingConfig, extract_terms, idf, split_chunks


@dataclass
class DocRecord:
    doc_id: str
    title: str
    text: str
    source_offset: int = 0


@dataclass
class CorpusFormatError(Exception):
    line_no: int
    reason: str

    def __str__(self):
        return f"corpus line {self.line_no}: {self.reason}"


def read_corpus_jsonl(path: str) -> list[DocRecord]:
    """One JSON object per line with fields doc_id, title, text."""
    docs = []
    offset = 0
    with open(path, "rb") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.decode("utf-8", errors="replace").strip()
            if line:
                try:
                    obj = json.loads(line)
                    docs.append(DocRecord(
                        str(obj["doc_id"]), str(obj.get("title", "")),
                        str(obj["text"]), offset))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise CorpusFormatError(line_no, str(exc)) from exc
            offset += len(raw)
    return docs


@dataclass
class BuildStats:
    docs: int = 0
    chunks: int = 0
    tokens: int = 0
    semantic_nodes: int = 0
    multi_sense_tokens: int = 0
    ingest_seconds: float = 0.0
    induction_seconds: float = 0.0
    per_doc_seconds: list[float] = field(default_factory=list)

    @property
    def ait_s(self) -> float:
        if self.docs == 0:
            return 0.0
        return (self.ingest_seconds + self.induction_seconds) / self.docs


def _prepare_document(doc: DocRecord, provider, chunking: ChunkingConfig):
    """Worker stage: pure per-document computation, no graph access."""
    t0 = time.perf_counter()
    prepared = []
    for chunk_text in split_chunks(doc.text, chunking):
        terms = extract_terms(chunk_text, chunking)
        vectors = None
        if terms:
            resp = provider.embed_spans(
                EmbedRequest(chunk_text, tuple(t.span for t in terms)))
            vectors = resp.vectors
        prepared.append((chunk_text, terms, vectors))
    return prepared, time.perf_counter() - t0


def build_index(docs: list[DocRecord], provider, chunking: ChunkingConfig,
                induction: InductionConfig, jobs: int = 1) -> tuple[SemanticGraph, BuildStats]:
    """Build a complete semantic graph from document records.

    Token batches accumulate across the whole corpus first so that
    dispersion and idf gates see the final statistics, then induction runs
    token by token in id order.
    """
    graph = SemanticGraph()
    stats = BuildStats(docs=len(docs))
    graph.provider_meta = provider.meta()
    if hasattr(provider, "dim"):
        graph.dim = provider.dim

    batches: dict[int, list[BatchItem]] = {}

    def ingest(doc: DocRecord, prepared) -> None:
        graph.add_document(doc.doc_id, doc.title, doc.source_offset)
        for chunk_text, terms, vectors in prepared:
            chunk_id = graph.insert_chunk(doc.doc_id, chunk_text, terms)
            if vectors is None:
                continue
            for i, term in enumerate(terms):
                token_id = graph.get_or_create_token(term.surface)
                batches.setdefault(token_id, []).append(
                    BatchItem(vectors[i], chunk_id, term.span))

    t0 = time.perf_counter()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(
                lambda d: _prepare_document(d, provider, chunking), docs))
        for doc, (prepared, seconds) in zip(docs, results):
            stats.per_doc_seconds.append(seconds)
            ingest(doc, prepared)
    else:
        for doc in docs:
            prepared, seconds = _prepare_document(doc, provider, chunking)
            stats.per_doc_seconds.append(seconds)
            ingest(doc, prepared)
    stats.ingest_seconds = time.perf_counter() - t0

    t1 = time.perf_counter()
    for token_id in range(len(graph.tokens)):
        items = batches.get(token_id)
        if not items:
            continue
        surface = graph.tokens[token_id].surface
        token_idf = idf(surface, graph.stats)
        graph.tokens[token_id].idf = token_idf
        nodes = induce_semantic_nodes(EmbeddingBatch(token_id, items), token_idf, induction)
        for node in nodes:
            graph.attach_semantic_node(
                token_id, node.anchor, sorted(node.chunk_counts.items()),
                node.tau_anomaly, member_count=node.member_count)
    stats.induction_seconds = time.perf_counter() - t1

    stats.chunks = len(graph.chunks)
    stats.tokens = len(graph.tokens)
    stats.semantic_nodes = len(graph.sems)
    stats.multi_sense_tokens = graph.multi_sense_tokens()
    return graph, stats
