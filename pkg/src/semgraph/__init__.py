"""Semantic-aware graph retrieval without language models.

A corpus is indexed into a four-layer heterogeneous graph (documents,
chunks, semantic nodes, token nodes) where each semantic node captures
one context-dependent meaning of a surface token, induced by density
clustering of contextual embeddings. Queries run a two-step retrieval:
co-occurrence graph ranking over matched senses, then isolated-sense
recovery for matches without structural support.
"""

from . import errors
from .embed import (EmbedRequest, EmbedResponse, HttpEmbedClient, ProviderMeta,
                    SyntheticEncoder, synthetic_encode)
from .evaluation import (Qrels, RunFile, load_qrels_tsv, load_queries_jsonl,
                         load_run_tsv, mrr_at_10, recall_at_10, timing_report)
from .graph import (ChunkNode, CorpusStats, DocumentNode, SemanticGraph,
                    SemanticNode, TokenNode)
from .indexer import BuildStats, DocRecord, build_index, read_corpus_jsonl
from .induction import (AnomalySet, Assigned, EmbeddingBatch, InducedNode,
                        InductionConfig, Quarantined, ReclusterResult,
                        aggregate_by_chunk, anomaly_set, assimilate_embedding,
                        density_cluster, induce_semantic_nodes, nth_percentile,
                        recluster_anomalies, s_mean, should_induce)
from .persist import load_index, save_index
from .retrieval import (CoocGraph, QueryConfig, RankedChunk, RankedResult,
                        SemanticMatch, broad_baseline, build_cooc_graph,
                        cooc_weight, match_semantic_nodes, node_weight, retrieve,
                        score_chunk, stage1_retrieve, recover_isolated,
                        write_run_file)
from .textpipe import (ChunkingConfig, TermOccurrence, default_stopwords,
                       extract_terms, idf, normalize_surface, split_chunks)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
