"""Semantic node induction from contextual embeddings.

Each token's collected embeddings either stay a single sense (anchor =
normalized mean) or are split by density clustering into one node per
cluster. Splitting runs only when the token is rare enough (idf above
threshold) and its embeddings are dispersed enough (mean cosine to the
centroid below threshold). When raw clustering is degenerate, per-chunk
mean embeddings are clustered instead: averaging within a chunk cancels
occurrence-level noise while preserving differences between chunks, which
is frequently enough to recover senses that weak local context hides.

Incremental updates go through ``assimilate_embedding``: a new embedding
joins its most similar node when similarity clears that node's adaptive
threshold, and is quarantined otherwise. A full quarantine buffer is
reclustered; surviving clusters become new nodes and the rest are folded
into their nearest existing node.

Module-level ``counters`` exposes structured event counts
("chunk_aggregation_fallback", "anomaly_recluster", "anomaly_new_node")
so pipelines and tests can observe which paths fired.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from sklearn.cluster import HDBSCAN

from . import errors
from .graph import SemanticGraph

logger = logging.getLogger(__name__)

counters: Counter = Counter()

NOISE = -1


@dataclass
class BatchItem:
    embedding: np.ndarray
    chunk_id: int
    span: tuple[int, int] = (0, 0)


@dataclass
class EmbeddingBatch:
    """All contextual embeddings collected for one token during indexing."""

    token_id: int
    items: list[BatchItem]


@dataclass
class InductionConfig:
    tau_idf: float = 1.0
    tau_disp: float = 0.85
    min_cluster_size: int = 3
    anomaly_percentile: float = 5.0
    anomaly_set_capacity: int = 16
    aggregation_noise_threshold: float = 0.3
    # absolute cosine-distance scale below which cluster structure is
    # considered noise-level; keeps near-identical embedding sets whole
    cluster_epsilon: float = 0.01

    def __post_init__(self):
        if self.tau_idf < 0:
            raise errors.ConfigError("tau_idf must be >= 0")
        if not -1.0 <= self.tau_disp <= 1.0:
            raise errors.ConfigError("tau_disp must be in [-1, 1]")
        if self.min_cluster_size < 2:
            raise errors.ConfigError("min_cluster_size must be >= 2")
        if not 0.0 < self.anomaly_percentile < 100.0:
            raise errors.ConfigError("anomaly_percentile must be in (0, 100)")
        if self.anomaly_set_capacity < 1:
            raise errors.ConfigError("anomaly_set_capacity must be >= 1")
        if not 0.0 <= self.aggregation_noise_threshold <= 1.0:
            raise errors.ConfigError("aggregation_noise_threshold must be in [0, 1]")


@dataclass
class AnomalySet:
    token_id: int
    pending: list[tuple[np.ndarray, int]] = field(default_factory=list)


def anomaly_set(graph: "SemanticGraph", token_id: int) -> AnomalySet:
    """Snapshot view of a token's quarantine buffer."""
    return AnomalySet(token_id, list(graph.anomaly_pending.get(token_id, [])))


@dataclass
class InducedNode:
    anchor: np.ndarray          # unit-norm float64
    chunk_counts: dict[int, int]
    member_count: int
    tau_anomaly: float


@dataclass
class Assigned:
    sem_id: int


@dataclass
class Quarantined:
    recluster: "ReclusterResult | None" = None


@dataclass
class ReclusterResult:
    new_sem_ids: tuple[int, ...]
    absorbed: int

    @property
    def created(self) -> bool:
        return bool(self.new_sem_ids)


# ---------------------------------------------------------------------------
# scalar building blocks


def s_mean(embeddings) -> float:
    """Mean cosine similarity between each embedding and their centroid.

    1.0 means perfectly concentrated; low values signal multiple senses.
    Returns 0 when the centroid vanishes (for example antipodal pairs).
    """
    E = np.asarray(embeddings, dtype=np.float64)
    if E.size == 0:
        raise errors.EmptyInput("s_mean of empty embedding set")
    centroid = E.mean(axis=0)
    norm = np.linalg.norm(centroid)
    if norm < 1e-12:
        return 0.0
    norms = np.linalg.norm(E, axis=1)
    return float(np.mean((E @ centroid) / (norms * norm)))


def should_induce(idf: float, smean: float, cfg: InductionConfig) -> bool:
    """Cluster only rare, dispersed tokens: both inequalities strict."""
    return idf > cfg.tau_idf and smean < cfg.tau_disp


def nth_percentile(values, n: float) -> float:
    """Nearest-rank percentile: sorted ascending, element at
    ceil(n/100 * len) - 1."""
    vals = sorted(values)
    if not vals:
        raise errors.EmptyInput("percentile of empty value list")
    if not 0.0 < n < 100.0:
        raise ValueError("percentile rank must be in (0, 100)")
    rank = math.ceil(n * len(vals) / 100.0)
    rank = min(max(rank, 1), len(vals))
    return vals[rank - 1]


def density_cluster(embeddings, min_cluster_size: int,
                    cluster_epsilon: float = 0.01) -> np.ndarray:
    """Density clustering over cosine distance; noise labeled -1.

    Deterministic for a fixed input order. Fewer points than
    ``min_cluster_size`` is all noise. Cluster ids are renumbered in order
    of first appearance.
    """
    E = np.asarray(embeddings, dtype=np.float64)
    if E.size == 0:
        raise errors.EmptyInput("cannot cluster an empty embedding set")
    n = E.shape[0]
    if n < min_cluster_size:
        return np.full(n, NOISE, dtype=int)
    dist = 1.0 - E @ E.T
    np.fill_diagonal(dist, 0.0)
    np.clip(dist, 0.0, None, out=dist)
    dist = (dist + dist.T) / 2.0
    labels = HDBSCAN(
        min_cluster_size=min_cluster_size,
        metric="precomputed",
        allow_single_cluster=True,
        cluster_selection_epsilon=cluster_epsilon,
    ).fit_predict(dist)
    # renumber clusters by first appearance
    remap: dict[int, int] = {}
    out = np.full(n, NOISE, dtype=int)
    for i, lab in enumerate(labels):
        if lab == NOISE:
            continue
        if lab not in remap:
            remap[lab] = len(remap)
        out[i] = remap[lab]
    return out


def aggregate_by_chunk(batch: EmbeddingBatch) -> list[tuple[np.ndarray, int]]:
    """Replace per-occurrence embeddings with one re-normalized mean per
    chunk, ordered by ascending chunk id."""
    if not batch.items:
        raise errors.EmptyInput("cannot aggregate an empty batch")
    groups: dict[int, list[np.ndarray]] = {}
    for item in batch.items:
        groups.setdefault(item.chunk_id, []).append(
            np.asarray(item.embedding, dtype=np.float64))
    out = []
    for chunk_id in sorted(groups):
        mean = np.mean(groups[chunk_id], axis=0)
        norm = np.linalg.norm(mean)
        if norm > 1e-12:
            mean = mean / norm
        out.append((mean, chunk_id))
    return out


# ---------------------------------------------------------------------------
# induction


def _unit_mean(vectors: np.ndarray) -> np.ndarray:
    mean = vectors.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm > 1e-12:
        mean = mean / norm
    return mean


def _make_node(anchor: np.ndarray, member_vectors: np.ndarray,
               chunk_ids, member_count: int, cfg: InductionConfig) -> InducedNode:
    sims = member_vectors @ anchor
    tau = nth_percentile(sims.tolist(), cfg.anomaly_percentile)
    counts: dict[int, int] = {}
    for cid in chunk_ids:
        counts[cid] = counts.get(cid, 0) + 1
    return InducedNode(anchor, counts, member_count, float(tau))


def induce_semantic_nodes(batch: EmbeddingBatch, idf: float,
                          cfg: InductionConfig) -> list[InducedNode]:
    """Turn one token's embeddings into one or more semantic nodes.

    Gate failure (or too few points to cluster) yields a single node over
    everything. Otherwise raw embeddings are clustered; a degenerate
    result (no clusters, or one cluster whose noise fraction exceeds the
    configured threshold) retries on per-chunk means. Noise points join
    the nearest resulting anchor, so every ingested occurrence is covered
    by exactly one node.
    """
    if not batch.items:
        raise errors.EmptyInput("cannot induce nodes from an empty batch")
    E = np.stack([np.asarray(it.embedding, dtype=np.float64) for it in batch.items])
    chunk_ids = [it.chunk_id for it in batch.items]
    n = len(batch.items)

    def single_node() -> list[InducedNode]:
        anchor = _unit_mean(E)
        return [_make_node(anchor, E, chunk_ids, n, cfg)]

    if n < cfg.min_cluster_size or not should_induce(idf, s_mean(E), cfg):
        return single_node()

    labels = density_cluster(E, cfg.min_cluster_size, cfg.cluster_epsilon)
    n_clusters = int(labels.max()) + 1 if labels.max() >= 0 else 0
    noise_frac = float(np.mean(labels == NOISE))
    degenerate = n_clusters == 0 or (
        n_clusters == 1 and noise_frac > cfg.aggregation_noise_threshold)

    if not degenerate:
        return _nodes_from_raw(E, chunk_ids, labels, n_clusters, cfg)

    counters["chunk_aggregation_fallback"] += 1
    logger.info("induction_fallback token_id=%d path=chunk_aggregation n=%d "
                "raw_clusters=%d noise_frac=%.3f",
                batch.token_id, n, n_clusters, noise_frac)

    agg = aggregate_by_chunk(batch)
    agg_vecs = np.stack([v for v, _ in agg])
    agg_chunks = [c for _, c in agg]
    agg_labels = density_cluster(agg_vecs, cfg.min_cluster_size, cfg.cluster_epsilon)
    agg_n_clusters = int(agg_labels.max()) + 1 if agg_labels.max() >= 0 else 0
    if agg_n_clusters == 0:
        return single_node()
    return _nodes_from_chunks(E, chunk_ids, agg_vecs, agg_chunks,
                              agg_labels, agg_n_clusters, cfg)


def _nodes_from_raw(E, chunk_ids, labels, n_clusters, cfg) -> list[InducedNode]:
    anchors = []
    member_idx: list[list[int]] = [[] for _ in range(n_clusters)]
    for i, lab in enumerate(labels):
        if lab != NOISE:
            member_idx[lab].append(i)
    for members in member_idx:
        anchors.append(_unit_mean(E[members]))
    # noise points join the nearest anchor
    for i, lab in enumerate(labels):
        if lab == NOISE:
            sims = [float(E[i] @ a) for a in anchors]
            member_idx[int(np.argmax(sims))].append(i)
    nodes = []
    for k, members in enumerate(member_idx):
        members = sorted(members)
        averaged = sum(1 for i in members if labels[i] == k)
        nodes.append(_make_node(anchors[k], E[members],
                                [chunk_ids[i] for i in members], averaged, cfg))
    return nodes


def _nodes_from_chunks(E, chunk_ids, agg_vecs, agg_chunks, labels,
                       n_clusters, cfg) -> list[InducedNode]:
    anchors = []
    chunk_groups: list[list[int]] = [[] for _ in range(n_clusters)]
    for j, lab in enumerate(labels):
        if lab != NOISE:
            chunk_groups[lab].append(j)
    for group in chunk_groups:
        anchors.append(_unit_mean(agg_vecs[group]))
    for j, lab in enumerate(labels):
        if lab == NOISE:
            sims = [float(agg_vecs[j] @ a) for a in anchors]
            chunk_groups[int(np.argmax(sims))].append(j)
    nodes = []
    for k, group in enumerate(chunk_groups):
        group_chunks = {agg_chunks[j] for j in group}
        averaged = sum(1 for j in group if labels[j] == k)
        raw_idx = sorted(i for i, c in enumerate(chunk_ids) if c in group_chunks)
        nodes.append(_make_node(anchors[k], E[raw_idx],
                                [chunk_ids[i] for i in raw_idx], averaged, cfg))
    return nodes


# ---------------------------------------------------------------------------
# incremental updates


def assimilate_embedding(token_id: int, e_new: np.ndarray, chunk_id: int,
                         graph: SemanticGraph, cfg: InductionConfig):
    """Route one new embedding for an already-induced token.

    Joins the most similar node when similarity clears that node's
    adaptive threshold; otherwise quarantines the embedding, reclustering
    synchronously once the quarantine reaches capacity.
    """
    token = graph.tokens[token_id] if 0 <= token_id < len(graph.tokens) else None
    if token is None or not token.semantic_ids:
        raise errors.InvalidState(
            f"token {token_id} has no semantic nodes; run induction first")
    e_new = np.asarray(e_new, dtype=np.float64)

    best_id, best_sim = None, -2.0
    for sem_id in sorted(token.semantic_ids):
        sim = float(e_new @ graph.sems[sem_id].anchor.astype(np.float64))
        if sim > best_sim:
            best_id, best_sim = sem_id, sim
    if best_sim >= graph.sems[best_id].tau_anomaly:
        graph.add_occurrence(best_id, chunk_id, e_new)
        return Assigned(best_id)

    pending = graph.anomaly_pending.setdefault(token_id, [])
    pending.append((e_new.astype(np.float32), chunk_id))
    if len(pending) >= cfg.anomaly_set_capacity:
        return Quarantined(recluster=recluster_anomalies(token_id, graph, cfg))
    return Quarantined()


def recluster_anomalies(token_id: int, graph: SemanticGraph,
                        cfg: InductionConfig) -> ReclusterResult:
    """Recluster a token's quarantined embeddings.

    Each discovered cluster becomes a new semantic node; leftover points
    are folded into their nearest node (including the new ones). The
    quarantine buffer is emptied in all cases.
    """
    pending = graph.anomaly_pending.pop(token_id, [])
    if not pending:
        raise errors.InvalidState(f"token {token_id} has no pending anomalies")
    counters["anomaly_recluster"] += 1

    E = np.stack([np.asarray(e, dtype=np.float64) for e, _ in pending])
    chunk_ids = [c for _, c in pending]
    labels = density_cluster(E, cfg.min_cluster_size, cfg.cluster_epsilon)
    n_clusters = int(labels.max()) + 1 if labels.max() >= 0 else 0

    new_ids = []
    for k in range(n_clusters):
        members = [i for i, lab in enumerate(labels) if lab == k]
        anchor = _unit_mean(E[members])
        node = _make_node(anchor, E[members], [chunk_ids[i] for i in members],
                          len(members), cfg)
        sem_id = graph.attach_semantic_node(
            token_id, node.anchor, sorted(node.chunk_counts.items()),
            node.tau_anomaly, member_count=node.member_count)
        new_ids.append(sem_id)
        counters["anomaly_new_node"] += 1

    absorbed = 0
    token = graph.tokens[token_id]
    for i, lab in enumerate(labels):
        if lab != NOISE:
            continue
        best_id, best_sim = None, -2.0
        for sem_id in sorted(token.semantic_ids):
            sim = float(E[i] @ graph.sems[sem_id].anchor.astype(np.float64))
            if sim > best_sim:
                best_id, best_sim = sem_id, sim
        graph.add_occurrence(best_id, chunk_ids[i], E[i])
        absorbed += 1

    logger.info("anomaly_recluster token_id=%d pending=%d new_nodes=%d absorbed=%d",
                token_id, len(pending), len(new_ids), absorbed)
    return ReclusterResult(tuple(new_ids), absorbed)
