"""Single-file binary persistence for the semantic graph.

Layout: 8-byte magic, u32 format version, then little-endian fixed-width
records (strings are u32 length + UTF-8 bytes, anchors are raw float32),
finished with a CRC32 of everything between the magic and the checksum.
Loading a saved graph reproduces every node, edge, anchor (bit-exact),
and corpus statistic.
"""

from __future__ import annotations

import struct
import zlib
from io import BytesIO

import numpy as np

from . import errors
from .embed import ProviderMeta
from .graph import ChunkNode, DocumentNode, SemanticGraph, SemanticNode, TokenNode

MAGIC = b"SEMGIDX1"
VERSION = 1

_PROVIDER_KINDS = {"synthetic": 0, "http": 1}
_PROVIDER_NAMES = {v: k for k, v in _PROVIDER_KINDS.items()}


class _Writer:
    def __init__(self):
        self.buf = BytesIO()

    def u8(self, v): self.buf.write(struct.pack("<B", v))
    def u32(self, v): self.buf.write(struct.pack("<I", v))
    def u64(self, v): self.buf.write(struct.pack("<Q", v))
    def f64(self, v): self.buf.write(struct.pack("<d", v))

    def string(self, s: str):
        raw = s.encode("utf-8")
        self.u32(len(raw))
        self.buf.write(raw)

    def f32_array(self, a: np.ndarray):
        self.buf.write(np.ascontiguousarray(a, dtype=np.float32).tobytes())


class _Reader:
    def __init__(self, data: bytes, base_offset: int = 0):
        self.data = data
        self.pos = 0
        self.base = base_offset

    @property
    def offset(self) -> int:
        return self.base + self.pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise errors.IndexCorrupt("unexpected end of file", self.offset)
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self): return struct.unpack("<B", self.take(1))[0]
    def u32(self): return struct.unpack("<I", self.take(4))[0]
    def u64(self): return struct.unpack("<Q", self.take(8))[0]
    def f64(self): return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        n = self.u32()
        start = self.offset
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise errors.IndexCorrupt("invalid UTF-8 in string field", start)

    def f32_array(self, count: int) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4").astype(np.float32, copy=True)


def save_index(graph: SemanticGraph, path: str) -> None:
    w = _Writer()
    meta = graph.provider_meta or ProviderMeta()
    w.u32(graph.dim or 0)
    w.u8(_PROVIDER_KINDS.get(meta.kind, 0))
    w.u64(meta.seed)
    w.f64(meta.gamma)
    w.string(meta.url)

    w.u32(len(graph.docs))
    w.u32(len(graph.chunks))
    w.u32(len(graph.tokens))
    w.u32(len(graph.sems))

    w.u64(graph.stats.total_terms)
    w.u32(len(graph.stats.df))
    for surface in sorted(graph.stats.df):
        w.string(surface)
        w.u32(graph.stats.df[surface])

    for doc in graph.docs:
        w.string(doc.doc_id)
        w.string(doc.title)
        w.u64(doc.source_offset)

    for chunk in graph.chunks:
        w.u32(chunk.doc_idx)
        w.string(chunk.text)
        w.u32(chunk.length_terms)

    for tok in graph.tokens:
        w.string(tok.surface)
        w.f64(tok.idf)

    for sem in graph.sems:
        w.u32(sem.token_id)
        w.u32(sem.member_count)
        w.f64(sem.tau_anomaly)
        w.f32_array(sem.anchor)
        w.u32(len(sem.chunk_freq))
        for chunk_id in sorted(sem.chunk_freq):
            w.u32(chunk_id)
            w.u32(sem.chunk_freq[chunk_id])

    pending_tokens = sorted(tid for tid, items in graph.anomaly_pending.items() if items)
    w.u32(len(pending_tokens))
    for tid in pending_tokens:
        items = graph.anomaly_pending[tid]
        w.u32(tid)
        w.u32(len(items))
        for emb, chunk_id in items:
            w.u32(chunk_id)
            w.f32_array(np.asarray(emb, dtype=np.float32))

    payload = w.buf.getvalue()
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(payload)
        fh.write(struct.pack("<I", crc))


def load_index(path: str) -> SemanticGraph:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 8:
        raise errors.IndexCorrupt("file too short for header", 0)
    if blob[:len(MAGIC)] != MAGIC:
        raise errors.IndexCorrupt("bad magic bytes", 0)
    version = struct.unpack("<I", blob[len(MAGIC):len(MAGIC) + 4])[0]
    if version != VERSION:
        raise errors.VersionMismatch(
            f"index format version {version} is not supported (expected {VERSION})")

    body_start = len(MAGIC) + 4
    payload, crc_raw = blob[body_start:-4], blob[-4:]
    stored_crc = struct.unpack("<I", crc_raw)[0]
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise errors.IndexCorrupt("checksum mismatch", len(blob) - 4)

    r = _Reader(payload, base_offset=body_start)
    graph = SemanticGraph()

    dim = r.u32()
    graph.dim = dim or None
    kind = r.u8()
    if kind not in _PROVIDER_NAMES:
        raise errors.IndexCorrupt(f"unknown provider kind {kind}", r.offset - 1)
    seed = r.u64()
    gamma = r.f64()
    url = r.string()
    graph.provider_meta = ProviderMeta(_PROVIDER_NAMES[kind], seed, dim, gamma, url)

    n_docs, n_chunks, n_tokens, n_sems = r.u32(), r.u32(), r.u32(), r.u32()

    graph.stats.total_terms = r.u64()
    for _ in range(r.u32()):
        surface = r.string()
        graph.stats.df[surface] = r.u32()

    for _ in range(n_docs):
        doc_id, title, offset = r.string(), r.string(), r.u64()
        idx = len(graph.docs)
        graph.docs.append(DocumentNode(doc_id, title, offset))
        graph.doc_index[doc_id] = idx
        graph.doc_chunks.append([])

    for chunk_id in range(n_chunks):
        doc_idx = r.u32()
        if doc_idx >= n_docs:
            raise errors.IndexCorrupt(f"chunk references doc {doc_idx}", r.offset - 4)
        text = r.string()
        length_terms = r.u32()
        graph.chunks.append(ChunkNode(chunk_id, doc_idx, text, length_terms))
        graph.chunk_sems.append(set())
        graph.doc_chunks[doc_idx].append(chunk_id)
    graph.stats.chunk_count = n_chunks

    for token_id in range(n_tokens):
        surface = r.string()
        idf = r.f64()
        graph.tokens.append(TokenNode(token_id, surface, idf))
        graph.token_index[surface] = token_id

    for sem_id in range(n_sems):
        token_id = r.u32()
        if token_id >= n_tokens:
            raise errors.IndexCorrupt(f"semantic node references token {token_id}", r.offset - 4)
        member_count = r.u32()
        tau = r.f64()
        if dim == 0:
            raise errors.IndexCorrupt("semantic node present but dim is 0", r.offset)
        anchor = r.f32_array(dim)
        chunk_freq = {}
        for _ in range(r.u32()):
            chunk_id = r.u32()
            if chunk_id >= n_chunks:
                raise errors.IndexCorrupt(f"edge references chunk {chunk_id}", r.offset - 4)
            chunk_freq[chunk_id] = r.u32()
        node = SemanticNode(sem_id, token_id, anchor, member_count, tau, chunk_freq)
        graph.sems.append(node)
        graph.tokens[token_id].semantic_ids.add(sem_id)
        for chunk_id in chunk_freq:
            graph.chunk_sems[chunk_id].add(sem_id)

    for _ in range(r.u32()):
        tid = r.u32()
        if tid >= n_tokens:
            raise errors.IndexCorrupt(f"anomaly set references token {tid}", r.offset - 4)
        items = []
        for _ in range(r.u32()):
            chunk_id = r.u32()
            emb = r.f32_array(dim)
            items.append((emb, chunk_id))
        graph.anomaly_pending[tid] = items

    if r.pos != len(payload):
        raise errors.IndexCorrupt("trailing bytes after graph records", r.offset)
    return graph
