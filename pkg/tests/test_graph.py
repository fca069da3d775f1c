import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semgraph import ChunkingConfig, SemanticGraph, errors
from semgraph.textpipe import extract_terms

from helpers import basis, unit

CFG = ChunkingConfig(chunk_size=16)


def terms_for(text):
    return extract_terms(text, CFG)


class TestInsertChunk:
    def test_length_terms_echo(self):
        g = SemanticGraph()
        g.add_document("d1", "first")
        cid = g.insert_chunk("d1", "the cat sat", terms_for("the cat sat"))
        assert g.chunks[cid].length_terms == 2  # "the" is a stopword

    def test_explicit_terms_count(self):
        g = SemanticGraph()
        g.add_document("d1")
        terms = terms_for("red apple pie")
        cid = g.insert_chunk("d1", "red apple pie", terms)
        assert g.chunks[cid].length_terms == 3
        assert all(t.chunk_id == cid for t in terms)

    def test_avg_chunk_len(self):
        g = SemanticGraph()
        g.add_document("d1")
        g.insert_chunk("d1", "alpha beta", terms_for("alpha beta"))
        g.insert_chunk("d1", "one two three four", terms_for("one two three four"))
        assert g.stats.avg_chunk_len == pytest.approx(3.0, abs=1e-12)

    def test_unknown_doc(self):
        g = SemanticGraph()
        with pytest.raises(errors.NotFound):
            g.insert_chunk("ghost", "text", [])

    def test_empty_text(self):
        g = SemanticGraph()
        g.add_document("d1")
        with pytest.raises(errors.EmptyChunk):
            g.insert_chunk("d1", "   ", [])

    def test_df_counts_distinct_surfaces(self):
        g = SemanticGraph()
        g.add_document("d1")
        g.insert_chunk("d1", "cat cat dog", terms_for("cat cat dog"))
        g.insert_chunk("d1", "cat bird", terms_for("cat bird"))
        assert g.stats.df == {"cat": 2, "dog": 1, "bird": 1}

    def test_duplicate_doc_id(self):
        g = SemanticGraph()
        g.add_document("d1")
        with pytest.raises(ValueError):
            g.add_document("d1")


class TestAttachSemanticNode:
    def graph(self):
        g = SemanticGraph(dim=8)
        g.add_document("d1")
        g.insert_chunk("d1", "alpha beta", terms_for("alpha beta"))
        g.insert_chunk("d1", "gamma delta", terms_for("gamma delta"))
        return g

    def test_field_echo(self):
        g = self.graph()
        t1 = g.get_or_create_token("alpha")
        s1 = g.attach_semantic_node(t1, basis(8, 0), [(0, 2)], tau=0.3)
        assert g.sems[s1].chunk_freq == {0: 2}
        assert g.sems[s1].tau_anomaly == 0.3
        assert s1 in g.tokens[t1].semantic_ids
        assert s1 in g.chunk_sems[0]

    def test_two_attachments_grow_token(self):
        g = self.graph()
        t1 = g.get_or_create_token("alpha")
        g.attach_semantic_node(t1, basis(8, 0), [(0, 1)], tau=0.1)
        g.attach_semantic_node(t1, basis(8, 1), [(1, 1)], tau=0.1)
        assert len(g.tokens[t1].semantic_ids) == 2

    def test_invalid_anchor(self):
        g = self.graph()
        t1 = g.get_or_create_token("alpha")
        with pytest.raises(errors.InvalidAnchor):
            g.attach_semantic_node(t1, basis(8, 0) * 0.5, [(0, 1)], tau=0.1)

    def test_unknown_chunk(self):
        g = self.graph()
        t1 = g.get_or_create_token("alpha")
        with pytest.raises(errors.NotFound):
            g.attach_semantic_node(t1, basis(8, 0), [(99, 1)], tau=0.1)

    def test_unknown_token(self):
        g = self.graph()
        with pytest.raises(errors.NotFound):
            g.attach_semantic_node(42, basis(8, 0), [(0, 1)], tau=0.1)

    def test_stored_anchor_is_unit_float32(self):
        g = self.graph()
        t1 = g.get_or_create_token("alpha")
        wobble = basis(8, 0) + 5e-5  # within attach tolerance
        s1 = g.attach_semantic_node(t1, unit(wobble) * (1 + 5e-5), [(0, 1)], tau=0.1)
        anchor = g.sems[s1].anchor
        assert anchor.dtype == np.float32
        assert abs(np.linalg.norm(anchor.astype(np.float64)) - 1.0) <= 1e-6


class TestInvariants:
    def test_ownership_and_layering(self, polysemy_index):
        graph, _, _ = polysemy_index
        for chunk in graph.chunks:
            assert 0 <= chunk.doc_idx < len(graph.docs)
        for doc_idx, chunk_ids in enumerate(graph.doc_chunks):
            for cid in chunk_ids:
                assert graph.chunks[cid].doc_idx == doc_idx
        for sem in graph.sems:
            assert 0 <= sem.token_id < len(graph.tokens)
            assert sem.sem_id in graph.tokens[sem.token_id].semantic_ids
            for cid in sem.chunk_freq:
                assert sem.sem_id in graph.chunk_sems[cid]
        for cid, sems in enumerate(graph.chunk_sems):
            for sid in sems:
                assert cid in graph.sems[sid].chunk_freq

    def test_every_document_has_chunks(self, polysemy_index):
        graph, _, _ = polysemy_index
        assert all(chunk_ids for chunk_ids in graph.doc_chunks)

    def test_anchor_norms(self, polysemy_index):
        graph, _, _ = polysemy_index
        for sem in graph.sems:
            assert abs(np.linalg.norm(sem.anchor.astype(np.float64)) - 1.0) <= 1e-6

    @given(st.lists(st.integers(1, 9), min_size=1, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_stats_consistency_over_inserts(self, lengths):
        g = SemanticGraph()
        g.add_document("d0")
        for i, n in enumerate(lengths):
            text = " ".join(f"w{i}x{j}" for j in range(n))
            g.insert_chunk("d0", text, terms_for(text))
        mean = sum(c.length_terms for c in g.chunks) / len(g.chunks)
        assert g.stats.avg_chunk_len == pytest.approx(mean, abs=1e-9)
        assert g.stats.chunk_count == len(lengths)
