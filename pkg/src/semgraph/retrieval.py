"""Two-step semantic-aware retrieval.

Step one matches query terms to semantic nodes at three levels (exact
surface, substring, anchor similarity), builds a query-specific
co-occurrence graph over the matched nodes, weights each node by its
co-occurrence mass times a level weight times query similarity, and ranks
candidate chunks with a BM25-style score over node frequencies.

Step two recovers matched nodes that ended up without co-occurrence
edges: weight is propagated within each token family, nodes are ranked
(propagated-weight group ahead of similarity-only group), and their
chunks are emitted round-robin so one sense cannot monopolize the tail of
the result list. Stage-one chunks always precede recovery chunks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .embed import EmbedRequest
from .graph import SemanticGraph
from .textpipe import ChunkingConfig, extract_terms

LEVEL_RANK = {"exact": 2, "partial": 1, "similarity": 0}


@dataclass
class QueryConfig:
    alpha_exact: float = 3.0
    alpha_partial: float = 2.0
    alpha_similarity: float = 1.0
    top_k_match: int = 10
    k1: float = 1.2
    b: float = 0.75
    mix_lambda: float = 0.7
    round_robin_k: int = 1
    sim_floor: float = 0.25
    min_edge_weight: float = 0.0

    def __post_init__(self):
        if not self.alpha_exact > self.alpha_partial > self.alpha_similarity > 0:
            raise errors.ConfigError(
                "level weights must satisfy alpha_exact > alpha_partial > alpha_similarity > 0")
        if not 0.0 <= self.mix_lambda <= 1.0:
            raise errors.ConfigError("mix_lambda must be in [0, 1]")
        if self.top_k_match < 1 or self.round_robin_k < 1:
            raise errors.ConfigError("top_k_match and round_robin_k must be >= 1")
        if self.k1 < 0 or not 0.0 <= self.b <= 1.0:
            raise errors.ConfigError("k1 must be >= 0 and b in [0, 1]")

    def alpha(self, level: str) -> float:
        return {"exact": self.alpha_exact, "partial": self.alpha_partial,
                "similarity": self.alpha_similarity}[level]


@dataclass
class SemanticMatch:
    sem_id: int
    level: str                 # exact | partial | similarity
    query_sim: float
    source_query_token: str


@dataclass
class CoocGraph:
    nodes: set[int] = field(default_factory=set)
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def weight(self, i: int, j: int) -> float:
        return self.edges.get((min(i, j), max(i, j)), 0.0)

    def neighbors(self, sem_id: int):
        for (a, b), w in self.edges.items():
            if a == sem_id:
                yield b, w
            elif b == sem_id:
                yield a, w


@dataclass
class RankedChunk:
    chunk_id: int
    doc_id: str
    score: float
    stage: str                 # cooc | recovery


@dataclass
class RankedResult:
    entries: list[RankedChunk] = field(default_factory=list)

    def chunk_ids(self) -> list[int]:
        return [e.chunk_id for e in self.entries]

    def doc_ids(self) -> list[str]:
        return [e.doc_id for e in self.entries]


# ---------------------------------------------------------------------------
# matching


def match_semantic_nodes(query_terms, graph: SemanticGraph,
                         cfg: QueryConfig) -> list[SemanticMatch]:
    """Match query terms to semantic nodes at three levels.

    ``query_terms`` is a list of (surface, embedding) pairs. For exact and
    partial levels each token contributes only its best sense by anchor
    similarity; partial and similarity levels keep the top-k per query
    term. A node matched at several levels keeps its highest level only.
    """
    best: dict[int, SemanticMatch] = {}

    def offer(sem_id: int, level: str, sim: float, source: str):
        cur = best.get(sem_id)
        if cur is None or (LEVEL_RANK[level], sim) > (LEVEL_RANK[cur.level], cur.query_sim):
            best[sem_id] = SemanticMatch(sem_id, level, sim, source)

    anchors = None
    for surface, e_q in query_terms:
        e_q = np.asarray(e_q, dtype=np.float64)

        token_id = graph.token_index.get(surface)
        if token_id is not None and graph.tokens[token_id].semantic_ids:
            sem_id, sim = _best_sense(graph, token_id, e_q)
            offer(sem_id, "exact", sim, surface)

        partial = []
        for other_surface, tid in graph.token_index.items():
            if surface in other_surface and other_surface != surface \
                    and graph.tokens[tid].semantic_ids:
                sem_id, sim = _best_sense(graph, tid, e_q)
                partial.append((sim, sem_id))
        partial.sort(key=lambda p: (-p[0], p[1]))
        for sim, sem_id in partial[:cfg.top_k_match]:
            offer(sem_id, "partial", sim, surface)

        if graph.sems:
            if anchors is None:
                anchors = np.stack([s.anchor.astype(np.float64) for s in graph.sems])
            sims = anchors @ e_q
            order = sorted(range(len(sims)), key=lambda i: (-sims[i], i))
            taken = 0
            for idx in order:
                if taken >= cfg.top_k_match or sims[idx] < cfg.sim_floor:
                    break
                offer(idx, "similarity", float(sims[idx]), surface)
                taken += 1

    return [best[sem_id] for sem_id in sorted(best)]


def _best_sense(graph: SemanticGraph, token_id: int, e_q: np.ndarray):
    best_id, best_sim = None, -2.0
    for sem_id in sorted(graph.tokens[token_id].semantic_ids):
        sim = float(e_q @ graph.sems[sem_id].anchor.astype(np.float64))
        if sim > best_sim:
            best_id, best_sim = sem_id, sim
    return best_id, best_sim


# ---------------------------------------------------------------------------
# co-occurrence graph


def cooc_weight(sem_i: int, sem_j: int, graph: SemanticGraph) -> float:
    """Normalized shared-chunk overlap |C(i) n C(j)| / sqrt(|C(i)||C(j)|)."""
    ci = graph.sems[sem_i].chunk_freq.keys()
    cj = graph.sems[sem_j].chunk_freq.keys()
    if not ci or not cj:
        raise errors.InvalidState("co-occurrence weight over a node with no chunks")
    inter = len(ci & cj)
    if inter == 0:
        return 0.0
    return inter / math.sqrt(len(ci) * len(cj))


def build_cooc_graph(matches: list[SemanticMatch], graph: SemanticGraph,
                     cfg: QueryConfig | None = None):
    """Pairwise co-occurrence edges over matched nodes.

    Returns the graph plus the matches that retained no edge (isolated).
    """
    min_w = cfg.min_edge_weight if cfg is not None else 0.0
    g = CoocGraph(nodes={m.sem_id for m in matches})
    ids = sorted(g.nodes)
    connected: set[int] = set()
    for a_pos, i in enumerate(ids):
        for j in ids[a_pos + 1:]:
            w = cooc_weight(i, j, graph)
            if w > min_w:
                g.edges[(i, j)] = w
                connected.add(i)
                connected.add(j)
    isolated = [m for m in matches if m.sem_id not in connected]
    return g, isolated


def node_weight(match: SemanticMatch, g: CoocGraph, cfg: QueryConfig) -> float:
    """Co-occurrence mass times level weight times query similarity;
    zero for nodes without neighbors."""
    total = sum(w for _, w in g.neighbors(match.sem_id))
    if total == 0.0:
        return 0.0
    return total * cfg.alpha(match.level) * match.query_sim


# ---------------------------------------------------------------------------
# chunk scoring


def score_chunk(chunk_id: int, active, graph: SemanticGraph,
                cfg: QueryConfig) -> float:
    """BM25-style score over the active semantic nodes present in a chunk.

    ``active`` maps sem_id to node weight (or is an iterable of pairs).
    Each node contributes at most one summand regardless of its frequency.
    """
    if isinstance(active, dict):
        weights = active
    else:
        weights = dict(active)
    avgcl = graph.stats.avg_chunk_len
    if avgcl <= 0:
        raise errors.InvalidState("corpus has no terms; average chunk length is 0")
    n_chunks = graph.stats.chunk_count
    length = graph.chunks[chunk_id].length_terms
    score = 0.0
    for sem_id in graph.chunk_sems[chunk_id]:
        w = weights.get(sem_id)
        if w is None:
            continue
        node = graph.sems[sem_id]
        f = node.chunk_freq.get(chunk_id, 0)
        if f == 0:
            continue
        n_s = len(node.chunk_freq)
        g_s = math.log((n_chunks - n_s + 0.5) / (n_s + 0.5) + 1.0)
        tf = (f * (cfg.k1 + 1.0)) / (f + cfg.k1 * (1.0 - cfg.b + cfg.b * length / avgcl))
        score += w * g_s * tf
    return score


# ---------------------------------------------------------------------------
# stage 1: co-occurrence retrieval


def stage1_retrieve(matches: list[SemanticMatch], cooc: CoocGraph,
                    graph: SemanticGraph, cfg: QueryConfig,
                    limit: int) -> list[tuple[int, float]]:
    """Rank the chunks of co-occurring matched nodes.

    Candidates are the union of chunks linked to non-isolated matches,
    ranked by score descending with ascending chunk id on ties.
    """
    connected: set[int] = set()
    for i, j in cooc.edges:
        connected.add(i)
        connected.add(j)
    active = {m.sem_id: node_weight(m, cooc, cfg)
              for m in matches if m.sem_id in connected}
    candidates: set[int] = set()
    for sid in active:
        candidates.update(graph.sems[sid].chunk_freq)
    ranked = sorted(
        ((cid, score_chunk(cid, active, graph, cfg)) for cid in candidates),
        key=lambda p: (-p[1], p[0]))
    return ranked[:limit]


# ---------------------------------------------------------------------------
# stage 2: isolated semantic recovery


def recover_isolated(isolated: list[SemanticMatch], matches: list[SemanticMatch],
                     cooc: CoocGraph, graph: SemanticGraph, cfg: QueryConfig,
                     limit: int, exclude=frozenset()) -> list[tuple[int, float]]:
    """Rank and emit chunks for matched nodes without co-occurrence edges.

    Weight from co-occurring nodes of the same token propagates to the
    isolated node (upper group); nodes with no such siblings rank by
    query similarity alone (lower group). Chunks are taken round-robin
    across the ordered nodes, ``round_robin_k`` at a time.
    """
    if not isolated or limit <= 0:
        return []
    weights = {m.sem_id: node_weight(m, cooc, cfg) for m in matches}

    upper, lower = [], []
    for m in isolated:
        token_id = graph.sems[m.sem_id].token_id
        w_prop = sum(
            weights.get(other.sem_id, 0.0)
            for other in matches
            if other.sem_id != m.sem_id
            and graph.sems[other.sem_id].token_id == token_id)
        if w_prop > 0.0:
            upper.append((w_prop * m.query_sim, w_prop, m))
        else:
            lower.append((m.query_sim, cfg.alpha(m.level) * m.query_sim, m))
    upper.sort(key=lambda t: (-t[0], t[2].sem_id))
    lower.sort(key=lambda t: (-t[0], t[2].sem_id))

    queues = []
    for _, eff_w, m in upper + lower:
        chunk_rank = sorted(
            ((cid, score_chunk(cid, {m.sem_id: eff_w}, graph, cfg))
             for cid in graph.sems[m.sem_id].chunk_freq),
            key=lambda p: (-p[1], p[0]))
        queues.append(chunk_rank)

    out: list[tuple[int, float]] = []
    emitted: set[int] = set(exclude)
    positions = [0] * len(queues)
    while len(out) < limit:
        progressed = False
        for qi, queue in enumerate(queues):
            taken = 0
            while positions[qi] < len(queue) and taken < cfg.round_robin_k \
                    and len(out) < limit:
                cid, score = queue[positions[qi]]
                positions[qi] += 1
                if cid in emitted:
                    continue
                emitted.add(cid)
                out.append((cid, score))
                taken += 1
                progressed = True
            if len(out) >= limit:
                break
        if not progressed:
            break
    return out


# ---------------------------------------------------------------------------
# full query


def query_terms_with_embeddings(query_text: str, provider,
                                chunking: ChunkingConfig):
    """Extract query terms and embed them, deduplicating repeated surfaces."""
    terms = extract_terms(query_text, chunking)
    seen: dict[str, int] = {}
    unique = []
    for t in terms:
        if t.surface not in seen:
            seen[t.surface] = len(unique)
            unique.append(t)
    if not unique:
        return []
    resp = provider.embed_spans(EmbedRequest(query_text, tuple(t.span for t in unique)))
    return [(t.surface, resp.vectors[i].astype(np.float64))
            for i, t in enumerate(unique)]


def retrieve(query_text: str, k: int, graph: SemanticGraph, provider,
             chunking: ChunkingConfig, cfg: QueryConfig) -> RankedResult:
    """Run the full two-step retrieval for one query.

    Stage one fills up to ceil(mix_lambda * k) slots, recovery fills the
    rest, and whichever stage under-fills is backfilled by the other.
    Stage-one entries always precede recovery entries and no chunk
    appears twice.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if graph.stats.chunk_count == 0:
        raise errors.EmptyIndex("index contains no chunks")

    terms = query_terms_with_embeddings(query_text, provider, chunking)
    if not terms:
        return RankedResult()
    matches = match_semantic_nodes(terms, graph, cfg)
    if not matches:
        return RankedResult()
    cooc, isolated = build_cooc_graph(matches, graph, cfg)

    stage1_quota = math.ceil(cfg.mix_lambda * k)
    stage1_full = stage1_retrieve(matches, cooc, graph, cfg, limit=len(graph.chunks))
    stage1 = stage1_full[:stage1_quota]
    taken = {cid for cid, _ in stage1}

    recovery = recover_isolated(isolated, matches, cooc, graph, cfg,
                                limit=k - len(stage1), exclude=taken)
    taken.update(cid for cid, _ in recovery)

    # backfill from stage-1 candidates beyond the quota if recovery fell short
    extra = []
    for cid, score in stage1_full[stage1_quota:]:
        if len(stage1) + len(recovery) + len(extra) >= k:
            break
        if cid not in taken:
            extra.append((cid, score))
            taken.add(cid)

    result = RankedResult()
    for cid, score in stage1 + extra:
        result.entries.append(RankedChunk(
            cid, graph.docs[graph.chunks[cid].doc_idx].doc_id, score, "cooc"))
    for cid, score in recovery:
        result.entries.append(RankedChunk(
            cid, graph.docs[graph.chunks[cid].doc_idx].doc_id, score, "recovery"))
    return result


def broad_baseline(query_text: str, k: int, graph: SemanticGraph, provider,
                   chunking: ChunkingConfig, cfg: QueryConfig) -> RankedResult:
    """Single-step ablation baseline: every chunk linked to any matched
    node, scored by the best matching node's query similarity alone."""
    if graph.stats.chunk_count == 0:
        raise errors.EmptyIndex("index contains no chunks")
    terms = query_terms_with_embeddings(query_text, provider, chunking)
    if not terms:
        return RankedResult()
    matches = match_semantic_nodes(terms, graph, cfg)
    chunk_best: dict[int, float] = {}
    for m in matches:
        for cid in graph.sems[m.sem_id].chunk_freq:
            if m.query_sim > chunk_best.get(cid, float("-inf")):
                chunk_best[cid] = m.query_sim
    ranked = sorted(chunk_best.items(), key=lambda p: (-p[1], p[0]))[:k]
    result = RankedResult()
    for cid, score in ranked:
        result.entries.append(RankedChunk(
            cid, graph.docs[graph.chunks[cid].doc_idx].doc_id, score, "cooc"))
    return result


# ---------------------------------------------------------------------------
# run files


def format_run_lines(query_id: str, result: RankedResult) -> list[str]:
    """TSV lines: query_id, chunk_id, doc_id, rank (1-based), score, stage."""
    return [
        f"{query_id}\t{e.chunk_id}\t{e.doc_id}\t{rank}\t{e.score:.6f}\t{e.stage}"
        for rank, e in enumerate(result.entries, start=1)
    ]


def write_run_file(path: str, results) -> None:
    """Write an iterable of (query_id, RankedResult) pairs as a run file."""
    with open(path, "w", encoding="utf-8") as fh:
        for query_id, result in results:
            for line in format_run_lines(query_id, result):
                fh.write(line + "\n")
