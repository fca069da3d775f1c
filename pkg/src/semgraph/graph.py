"""The four-layer heterogeneous semantic graph and its mutation API.

Layers: documents, chunks, semantic nodes, token nodes. The only edge
kinds are document-chunk, chunk-semantic, and semantic-token, all stored
as bidirectional adjacency. Identifiers are dense integers assigned in
insertion order; every tie-break elsewhere in the system is by ascending
id, which keeps the whole engine deterministic.

During construction the graph has a single writer. Once built (or loaded
from disk) it is immutable and safe to share across concurrent queries;
anomaly-driven reclustering requires exclusive access again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import errors
from .textpipe import TermOccurrence

ANCHOR_ATTACH_TOL = 1e-4


@dataclass
class DocumentNode:
    doc_id: str
    title: str
    source_offset: int = 0


@dataclass
class ChunkNode:
    chunk_id: int
    doc_idx: int
    text: str
    length_terms: int


@dataclass
class TokenNode:
    token_id: int
    surface: str
    idf: float = 0.0
    semantic_ids: set[int] = field(default_factory=set)


@dataclass
class SemanticNode:
    """One context-dependent meaning of a token.

    ``anchor`` is a unit-norm float32 vector; ``member_count`` is the
    number of contextual embeddings averaged into it; ``chunk_freq`` maps
    chunk id to occurrence count and its key set is exactly the chunks
    holding an edge to this node.
    """

    sem_id: int
    token_id: int
    anchor: np.ndarray
    member_count: int
    tau_anomaly: float
    chunk_freq: dict[int, int] = field(default_factory=dict)

    def chunk_set(self) -> set[int]:
        return set(self.chunk_freq)


@dataclass
class CorpusStats:
    chunk_count: int = 0
    total_terms: int = 0
    df: dict[str, int] = field(default_factory=dict)

    @property
    def avg_chunk_len(self) -> float:
        if self.chunk_count == 0:
            return 0.0
        return self.total_terms / self.chunk_count


class SemanticGraph:
    """Mutable store for the four node layers and three edge kinds."""

    def __init__(self, dim: int | None = None):
        self.dim = dim
        self.docs: list[DocumentNode] = []
        self.doc_index: dict[str, int] = {}
        self.doc_chunks: list[list[int]] = []
        self.chunks: list[ChunkNode] = []
        self.chunk_sems: list[set[int]] = []
        self.tokens: list[TokenNode] = []
        self.token_index: dict[str, int] = {}
        self.sems: list[SemanticNode] = []
        self.stats = CorpusStats()
        # per-token quarantine for embeddings dissimilar to all anchors
        self.anomaly_pending: dict[int, list[tuple[np.ndarray, int]]] = {}
        self.provider_meta = None

    # ------------------------------------------------------------------
    # documents and chunks

    def add_document(self, doc_id: str, title: str = "", source_offset: int = 0) -> int:
        if doc_id in self.doc_index:
            raise ValueError(f"duplicate doc_id {doc_id!r}")
        idx = len(self.docs)
        self.docs.append(DocumentNode(doc_id, title, source_offset))
        self.doc_index[doc_id] = idx
        self.doc_chunks.append([])
        return idx

    def insert_chunk(self, doc_id: str, text: str, terms: list[TermOccurrence]) -> int:
        if doc_id not in self.doc_index:
            raise errors.NotFound(f"unknown doc_id {doc_id!r}")
        if not text.strip():
            raise errors.EmptyChunk("chunk text is empty")
        chunk_id = len(self.chunks)
        doc_idx = self.doc_index[doc_id]
        self.chunks.append(ChunkNode(chunk_id, doc_idx, text, len(terms)))
        self.chunk_sems.append(set())
        self.doc_chunks[doc_idx].append(chunk_id)
        for t in terms:
            t.chunk_id = chunk_id
        self.stats.chunk_count += 1
        self.stats.total_terms += len(terms)
        for surface in {t.surface for t in terms}:
            self.stats.df[surface] = self.stats.df.get(surface, 0) + 1
        return chunk_id

    # ------------------------------------------------------------------
    # tokens and semantic nodes

    def get_or_create_token(self, surface: str) -> int:
        tid = self.token_index.get(surface)
        if tid is None:
            tid = len(self.tokens)
            self.tokens.append(TokenNode(tid, surface))
            self.token_index[surface] = tid
        return tid

    def attach_semantic_node(
        self,
        token_id: int,
        anchor: np.ndarray,
        members: list[tuple[int, int]],
        tau: float,
        member_count: int | None = None,
    ) -> int:
        """Create a semantic node and its chunk and token edges.

        ``members`` lists (chunk_id, occurrence_count) pairs. The anchor
        must already be unit-norm within 1e-4; it is re-normalized before
        storage so the persisted invariant is tight. ``member_count``
        defaults to the number of member chunks; induction overrides it
        with the number of embeddings actually averaged into the anchor.
        """
        if not 0 <= token_id < len(self.tokens):
            raise errors.NotFound(f"unknown token_id {token_id}")
        if not members:
            raise errors.EmptyInput("semantic node needs at least one member chunk")
        anchor = np.asarray(anchor, dtype=np.float64)
        norm = float(np.linalg.norm(anchor))
        if abs(norm - 1.0) > ANCHOR_ATTACH_TOL:
            raise errors.InvalidAnchor(f"anchor norm {norm:.6f} deviates from 1")
        if self.dim is None:
            self.dim = anchor.shape[0]
        elif anchor.shape[0] != self.dim:
            raise errors.DimensionMismatch(
                f"anchor dim {anchor.shape[0]} != graph dim {self.dim}")
        for chunk_id, count in members:
            if not 0 <= chunk_id < len(self.chunks):
                raise errors.NotFound(f"unknown chunk_id {chunk_id}")
            if count < 1:
                raise ValueError("member count must be >= 1")

        sem_id = len(self.sems)
        node = SemanticNode(
            sem_id=sem_id,
            token_id=token_id,
            anchor=(anchor / norm).astype(np.float32),
            member_count=member_count if member_count is not None else len(members),
            tau_anomaly=float(tau),
            chunk_freq={c: n for c, n in members},
        )
        self.sems.append(node)
        self.tokens[token_id].semantic_ids.add(sem_id)
        for chunk_id in node.chunk_freq:
            self.chunk_sems[chunk_id].add(sem_id)
        return sem_id

    def add_occurrence(self, sem_id: int, chunk_id: int, e_new: np.ndarray) -> None:
        """Fold one embedding into an existing node: running-mean anchor
        update with re-normalization, frequency and edge bookkeeping."""
        node = self.sems[sem_id]
        if not 0 <= chunk_id < len(self.chunks):
            raise errors.NotFound(f"unknown chunk_id {chunk_id}")
        old = node.anchor.astype(np.float64)
        updated = (old * node.member_count + np.asarray(e_new, dtype=np.float64))
        updated /= node.member_count + 1
        norm = float(np.linalg.norm(updated))
        if norm > 1e-12:
            node.anchor = (updated / norm).astype(np.float32)
        node.member_count += 1
        node.chunk_freq[chunk_id] = node.chunk_freq.get(chunk_id, 0) + 1
        self.chunk_sems[chunk_id].add(sem_id)

    # ------------------------------------------------------------------
    # views

    def multi_sense_tokens(self) -> int:
        return sum(1 for t in self.tokens if len(t.semantic_ids) > 1)

    def summary(self) -> dict:
        return {
            "docs": len(self.docs),
            "chunks": len(self.chunks),
            "tokens": len(self.tokens),
            "semantic_nodes": len(self.sems),
            "multi_sense_tokens": self.multi_sense_tokens(),
            "avg_chunk_len": self.stats.avg_chunk_len,
            "dim": self.dim,
        }

    # ------------------------------------------------------------------
    # equality (used by persistence round-trip checks)

    def deep_equals(self, other: "SemanticGraph") -> bool:
        if self.dim != other.dim:
            return False
        if self.docs != other.docs or self.chunks != other.chunks:
            return False
        if self.doc_chunks != other.doc_chunks or self.chunk_sems != other.chunk_sems:
            return False
        if self.tokens != other.tokens:
            return False
        if len(self.sems) != len(other.sems):
            return False
        for a, b in zip(self.sems, other.sems):
            if (a.sem_id, a.token_id, a.member_count) != (b.sem_id, b.token_id, b.member_count):
                return False
            if a.tau_anomaly != b.tau_anomaly or a.chunk_freq != b.chunk_freq:
                return False
            if a.anchor.tobytes() != b.anchor.tobytes():
                return False
        if (self.stats.chunk_count, self.stats.total_terms, self.stats.df) != (
                other.stats.chunk_count, other.stats.total_terms, other.stats.df):
            return False
        if set(self.anomaly_pending) != set(other.anomaly_pending):
            return False
        for tid, pend in self.anomaly_pending.items():
            opend = other.anomaly_pending[tid]
            if len(pend) != len(opend):
                return False
            for (e1, c1), (e2, c2) in zip(pend, opend):
                if c1 != c2 or np.asarray(e1, np.float32).tobytes() != np.asarray(e2, np.float32).tobytes():
                    return False
        return True
