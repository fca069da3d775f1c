"""Deterministic chunking, term extraction, and corpus-level statistics.

Everything in this module is a pure function of its inputs: identical
(text, config) pairs produce identical output on every run and platform.
Tokenization is a Unicode word regex, normalization is case-folding with
whitespace collapse, and phrases are maximal runs of two or more
capitalized tokens separated only by whitespace.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources

from . import errors

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def default_stopwords() -> frozenset[str]:
    """Load the English stopword list shipped with the package."""
    text = resources.files("semgraph.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def load_stopwords(path: str) -> frozenset[str]:
    """Load a stopword list from a plain text file, one surface per line."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def normalize_surface(text: str) -> str:
    """Case-fold and collapse internal whitespace to single spaces."""
    return " ".join(text.casefold().split())


@dataclass
class TermOccurrence:
    """One extracted surface term with its character span.

    ``surface`` always equals ``normalize_surface`` of the chunk text slice
    at ``span``. ``chunk_id`` is assigned when the occurrence is inserted
    into a graph.
    """

    surface: str
    span: tuple[int, int]
    is_phrase: bool = False
    chunk_id: int | None = None


@dataclass
class ChunkingConfig:
    chunk_size: int = 64
    overlap: int = 0
    stopwords: frozenset[str] = field(default_factory=default_stopwords)

    def __post_init__(self):
        if self.chunk_size < 1:
            raise errors.ConfigError("chunk_size must be >= 1")
        if not 0 <= self.overlap < self.chunk_size:
            raise errors.ConfigError("overlap must satisfy 0 <= overlap < chunk_size")


def _word_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in _WORD_RE.finditer(text)]


def split_chunks(text: str, cfg: ChunkingConfig) -> list[str]:
    """Split text into chunks of ``chunk_size`` non-stopword terms.

    Consecutive chunks share exactly ``overlap`` terms. Each chunk's text
    runs from the start of its first term to the end of its last, so the
    term stream concatenates back to the full filtered stream.
    """
    spans = [
        (s, e) for s, e in _word_spans(text)
        if text[s:e].casefold() not in cfg.stopwords
    ]
    if not spans:
        return []
    stride = cfg.chunk_size - cfg.overlap
    chunks = []
    start = 0
    while True:
        window = spans[start:start + cfg.chunk_size]
        chunks.append(text[window[0][0]:window[-1][1]])
        if start + cfg.chunk_size >= len(spans):
            break
        start += stride
    return chunks


def extract_terms(chunk_text: str, cfg: ChunkingConfig) -> list[TermOccurrence]:
    """Extract unigram terms and capitalized-run phrases from a chunk.

    Stopwords and pure-punctuation tokens are dropped. A maximal run of
    two or more capitalized non-stopword tokens, separated only by
    whitespace, additionally emits a phrase occurrence spanning the run;
    the run's unigrams are still emitted individually. Output is ordered
    by span start, longer spans first on ties.
    """
    spans = _word_spans(chunk_text)
    terms: list[TermOccurrence] = []

    def keep(s: int, e: int) -> bool:
        return chunk_text[s:e].casefold() not in cfg.stopwords

    for s, e in spans:
        if keep(s, e):
            terms.append(TermOccurrence(chunk_text[s:e].casefold(), (s, e)))

    # capitalized runs: adjacent capitalized tokens with whitespace-only gaps
    run: list[tuple[int, int]] = []

    def flush():
        if len(run) >= 2:
            s, e = run[0][0], run[-1][1]
            terms.append(TermOccurrence(normalize_surface(chunk_text[s:e]), (s, e), is_phrase=True))
        run.clear()

    for s, e in spans:
        tok = chunk_text[s:e]
        if tok[0].isupper() and keep(s, e):
            if run and chunk_text[run[-1][1]:s].strip():
                flush()
            run.append((s, e))
        else:
            flush()
    flush()

    terms.sort(key=lambda t: (t.span[0], -t.span[1]))
    return terms


def idf(surface: str, stats) -> float:
    """Smoothed inverse frequency of a surface over chunks.

    ``ln((N - df + 0.5) / (df + 0.5) + 1)`` with N the corpus chunk count
    and df the number of chunks containing the surface. Always positive.
    """
    if stats.chunk_count < 1:
        raise errors.EmptyInput("idf requires at least one chunk")
    df = stats.df.get(surface, 0)
    n = stats.chunk_count
    return math.log((n - df + 0.5) / (df + 0.5) + 1.0)
