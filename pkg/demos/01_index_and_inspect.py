"""Build a semantic graph from a synthetic corpus and walk its layers.

Run: python demos/01_index_and_inspect.py
"""

from semgraph import ChunkingConfig, InductionConfig, SyntheticEncoder, build_index
from semgraph.synth import make_polysemy_corpus

corpus = make_polysemy_corpus()
print(f"corpus: {len(corpus.docs)} documents "
      f"({len(corpus.fruit_doc_ids)} fruit-sense, {len(corpus.tech_doc_ids)} "
      f"tech-sense, {len(corpus.distractor_doc_ids)} distractors)")

provider = SyntheticEncoder(seed=42, dim=64, gamma=1.0)
chunking = ChunkingConfig(chunk_size=32)
induction = InductionConfig(tau_disp=0.95)

graph, stats = build_index(corpus.docs, provider, chunking, induction)
print(f"\nbuilt in {stats.ingest_seconds + stats.induction_seconds:.2f}s "
      f"({stats.ait_s * 1000:.1f} ms/doc)")
print("summary:", graph.summary())

print("\n--- layer walk for the ambiguous token ---")
token = graph.tokens[graph.token_index["apple"]]
print(f"token node {token.token_id} surface={token.surface!r} "
      f"idf={token.idf:.3f} senses={sorted(token.semantic_ids)}")
for sem_id in sorted(token.semantic_ids):
    node = graph.sems[sem_id]
    docs = sorted({graph.docs[graph.chunks[c].doc_idx].doc_id
                   for c in node.chunk_freq})
    print(f"  semantic node {sem_id}: {node.member_count} member embeddings, "
          f"tau_anomaly={node.tau_anomaly:.4f}")
    print(f"    linked chunks -> documents: {docs}")

print("\n--- a single-sense token for contrast ---")
token = graph.tokens[graph.token_index["orchard"]]
print(f"token node surface={token.surface!r} idf={token.idf:.3f} "
      f"senses={sorted(token.semantic_ids)}")
node = graph.sems[sorted(token.semantic_ids)[0]]
print(f"  one node spanning {len(node.chunk_freq)} chunks "
      f"(idf gate keeps frequent tokens whole)")

multi = [t.surface for t in graph.tokens if len(t.semantic_ids) > 1]
print(f"\nmulti-sense tokens in the whole graph: {multi}")
