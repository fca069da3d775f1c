"""Shared constructions used across test modules."""

import numpy as np

from semgraph import ChunkingConfig, InductionConfig, QueryConfig


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def basis(dim, i):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


# The planted-polysemy experiments share one configuration. gamma=1 bounds
# how dispersed a two-sense token can look under the synthetic encoder, so
# these runs use a wider dispersion gate than the library default.
SYNTH_INDUCTION = InductionConfig(tau_idf=1.0, tau_disp=0.95)
SYNTH_CHUNKING = ChunkingConfig(chunk_size=32)
SYNTH_QUERY = QueryConfig()
