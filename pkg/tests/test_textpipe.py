import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semgraph import errors
from semgraph.graph import CorpusStats
from semgraph.textpipe import (ChunkingConfig, default_stopwords, extract_terms,
                               idf, normalize_surface, split_chunks)

WORDS = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
         "iota", "kappa"]
TEN_TERMS = " ".join(WORDS)


def cfg(size=4, overlap=0):
    return ChunkingConfig(chunk_size=size, overlap=overlap)


class TestSplitChunks:
    def test_no_overlap_sizes(self):
        chunks = split_chunks(TEN_TERMS, cfg(4, 0))
        sizes = [len(extract_terms(c, cfg(4))) for c in chunks]
        assert sizes == [4, 4, 2]

    def test_overlap_stride(self):
        # stride = chunk_size - overlap = 2 -> starts at terms 0, 2, 4, 6
        chunks = split_chunks(TEN_TERMS, cfg(4, 2))
        assert len(chunks) == 4
        assert chunks[0].startswith("alpha")
        assert chunks[1].startswith("gamma")
        assert chunks[2].startswith("epsilon")
        assert chunks[3].startswith("eta ")

    def test_empty_text(self):
        assert split_chunks("", cfg()) == []

    def test_overlap_shares_exact_terms(self):
        chunks = split_chunks(TEN_TERMS, cfg(4, 2))
        for a, b in zip(chunks, chunks[1:]):
            ta = [t.surface for t in extract_terms(a, cfg(4))]
            tb = [t.surface for t in extract_terms(b, cfg(4))]
            assert ta[-2:] == tb[:2]

    def test_stopwords_do_not_count(self):
        text = "the alpha and beta of the gamma delta story"
        chunks = split_chunks(text, cfg(2, 0))
        sizes = [len(extract_terms(c, cfg(2))) for c in chunks]
        assert sizes == [2, 2, 1]

    @given(st.integers(1, 40), st.integers(2, 6))
    @settings(max_examples=50, deadline=None)
    def test_reconstructs_term_stream(self, n_terms, size):
        text = " ".join(WORDS[i % len(WORDS)] for i in range(n_terms))
        c = cfg(size, 0)
        stream = []
        for chunk in split_chunks(text, c):
            stream.extend(t.surface for t in extract_terms(chunk, c) if not t.is_phrase)
        assert stream == text.split()

    def test_invalid_overlap(self):
        with pytest.raises(errors.ConfigError):
            ChunkingConfig(chunk_size=4, overlap=4)


class TestExtractTerms:
    def test_phrase_and_unigrams(self):
        terms = extract_terms("the Apple Watch shipped", cfg())
        assert [(t.surface, t.is_phrase) for t in terms] == [
            ("apple watch", True), ("apple", False),
            ("watch", False), ("shipped", False)]

    def test_all_stopwords(self):
        assert extract_terms("and or the", cfg()) == []

    def test_multiplicity_preserved(self):
        terms = extract_terms("cat cat", cfg())
        assert [t.surface for t in terms] == ["cat", "cat"]
        assert terms[0].span != terms[1].span

    def test_stopword_breaks_capitalized_run(self):
        # "The" is capitalized but a stopword, so the run is Apple..Watch
        terms = extract_terms("The Apple Watch", cfg())
        phrases = [t for t in terms if t.is_phrase]
        assert [p.surface for p in phrases] == ["apple watch"]

    def test_punctuation_breaks_run(self):
        terms = extract_terms("Paris. London calling", cfg())
        assert not any(t.is_phrase for t in terms)

    def test_ordering_by_span(self):
        terms = extract_terms("Big Sur coastline", cfg())
        starts = [t.span[0] for t in terms]
        assert starts == sorted(starts)
        assert terms[0].is_phrase  # longest span first on tied start

    @given(st.lists(st.sampled_from(WORDS + ["the", "of", "Apple", "Watch"]),
                    min_size=1, max_size=12))
    @settings(max_examples=80, deadline=None)
    def test_span_fidelity(self, words):
        text = " ".join(words)
        for t in extract_terms(text, cfg()):
            assert t.surface == normalize_surface(text[t.span[0]:t.span[1]])

    def test_determinism(self):
        text = "Deep Learning methods for Information Retrieval tasks"
        assert extract_terms(text, cfg()) == extract_terms(text, cfg())


class TestIdf:
    def stats(self, n, df_map):
        s = CorpusStats(chunk_count=n, total_terms=n)
        s.df.update(df_map)
        return s

    def test_rare_surface(self):
        got = idf("x", self.stats(100, {"x": 1}))
        assert got == pytest.approx(math.log((100 - 1 + 0.5) / 1.5 + 1), abs=1e-12)
        assert got == pytest.approx(4.2097, abs=1e-4)

    def test_ubiquitous_surface(self):
        got = idf("x", self.stats(100, {"x": 100}))
        assert got == pytest.approx(math.log(0.5 / 100.5 + 1), abs=1e-12)
        assert got == pytest.approx(0.004963, abs=1e-6)

    def test_absent_surface_smallest_corpus(self):
        assert idf("missing", self.stats(1, {})) == pytest.approx(math.log(4), abs=1e-12)

    def test_always_positive(self):
        for n in (1, 3, 50):
            for df in range(0, n + 1):
                assert idf("x", self.stats(n, {"x": df})) > 0

    @given(st.integers(1, 500))
    @settings(max_examples=30, deadline=None)
    def test_monotone_in_df(self, n):
        values = [idf("x", self.stats(n, {"x": df})) for df in range(n + 1)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_empty_corpus_rejected(self):
        with pytest.raises(errors.EmptyInput):
            idf("x", self.stats(0, {}))


def test_default_stopwords_loaded():
    sw = default_stopwords()
    assert "the" in sw and "and" in sw
    assert "apple" not in sw
