import pytest

from semgraph import SemanticGraph, SyntheticEncoder, build_index
from semgraph.synth import make_polysemy_corpus
from semgraph.textpipe import ChunkingConfig, extract_terms

from helpers import SYNTH_CHUNKING, SYNTH_INDUCTION


@pytest.fixture
def chunking():
    return ChunkingConfig(chunk_size=16)


@pytest.fixture
def tiny_graph(chunking):
    """Three docs, one chunk each, no semantic nodes yet."""
    g = SemanticGraph(dim=8)
    for i, text in enumerate(["red apple pie baked", "green apple laptop sold",
                              "fresh orange juice pressed"]):
        g.add_document(f"d{i}", f"doc {i}")
        g.insert_chunk(f"d{i}", text, extract_terms(text, chunking))
    return g


@pytest.fixture(scope="session")
def polysemy_corpus():
    return make_polysemy_corpus()


@pytest.fixture(scope="session")
def polysemy_index(polysemy_corpus):
    """Shared planted-polysemy index; building it is the expensive part."""
    provider = SyntheticEncoder(seed=42, dim=64, gamma=1.0)
    graph, stats = build_index(polysemy_corpus.docs, provider,
                               SYNTH_CHUNKING, SYNTH_INDUCTION)
    return graph, stats, provider
