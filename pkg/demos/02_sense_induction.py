"""How a token's embeddings become semantic nodes.

Shows the dispersion gate, density clustering on a clean two-sense batch,
and the chunk-aggregation fallback when occurrence-level context is too
noisy for raw clustering.

Run: python demos/02_sense_induction.py
"""

import numpy as np

from semgraph import InductionConfig, induce_semantic_nodes, s_mean, should_induce
from semgraph.embed import synthetic_encode
from semgraph.induction import BatchItem, EmbeddingBatch, counters, density_cluster

FRUIT = ["cider", "orchard", "harvest"]
TECH = ["silicon", "keynote", "software"]
VARIANTS = [(5, 3, 2), (4, 4, 2), (5, 2, 3), (6, 3, 1), (4, 3, 3), (5, 4, 1)]


def clean_batch():
    items = []
    for ci, counts in enumerate(VARIANTS):
        bag = [w for w, n in zip(FRUIT, counts) for _ in range(n)]
        items.append(BatchItem(synthetic_encode("apple", bag, 1.0, 64, 42), ci))
    for ci, counts in enumerate(VARIANTS):
        bag = [w for w, n in zip(TECH, counts) for _ in range(n)]
        items.append(BatchItem(synthetic_encode("apple", bag, 1.0, 64, 42), 6 + ci))
    return EmbeddingBatch(0, items)


def noisy_batch():
    rng = np.random.default_rng(7)
    pool = [f"w{k}" for k in range(400)]
    items = []
    for ci in range(12):
        sense = FRUIT if ci < 6 else TECH
        for _ in range(16):
            bag = list(rng.choice(sense, size=2)) + list(rng.choice(pool, size=5))
            items.append(BatchItem(synthetic_encode("apple", bag, 1.0, 64, 42), ci))
    return EmbeddingBatch(0, items)


cfg = InductionConfig(tau_disp=0.95)

print("--- dispersion gate ---")
batch = clean_batch()
E = np.stack([it.embedding for it in batch.items])
disp = s_mean(E)
print(f"s_mean over 12 occurrences: {disp:.4f} "
      f"(gate: idf > {cfg.tau_idf} and s_mean < {cfg.tau_disp})")
print("gate opens for idf=1.6:", should_induce(1.6, disp, cfg))

print("\n--- raw density clustering ---")
labels = density_cluster(E, cfg.min_cluster_size, cfg.cluster_epsilon)
print("labels:", labels.tolist(), "(first 6 chunks are fruit contexts)")

nodes = induce_semantic_nodes(batch, idf=1.6, cfg=cfg)
print(f"induced {len(nodes)} semantic nodes:")
for i, node in enumerate(nodes):
    print(f"  node {i}: chunks={sorted(node.chunk_counts)} "
          f"tau={node.tau_anomaly:.4f}")

print("\n--- weak context: aggregation fallback ---")
noisy = noisy_batch()
E = np.stack([it.embedding for it in noisy.items])
labels = density_cluster(E, cfg.min_cluster_size, cfg.cluster_epsilon)
nclusters = len(set(labels.tolist()) - {-1})
print(f"raw clustering over {len(noisy.items)} noisy occurrences: "
      f"{nclusters} clusters, {int((labels == -1).sum())} noise points")

weak_cfg = InductionConfig(tau_disp=0.999)
before = counters["chunk_aggregation_fallback"]
nodes = induce_semantic_nodes(noisy, idf=3.0, cfg=weak_cfg)
print(f"fallback fired: {counters['chunk_aggregation_fallback'] - before} time(s)")
print(f"recovered {len(nodes)} nodes from per-chunk means:")
for i, node in enumerate(nodes):
    print(f"  node {i}: chunks={sorted(node.chunk_counts)}")
