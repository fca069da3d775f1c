"""Synthetic corpora with planted polysemy, for experiments and tests.

The generated corpus plants one ambiguous token ("apple") across two
disjoint context vocabularies (orchard produce vs consumer electronics),
surrounded by distractor documents on unrelated topics. Twenty of the
distractors share the term "orchard" with the produce documents, which
gives single-step similarity ranking a large set of exact ties while
frequency-aware two-step retrieval separates them.

Everything here is a pure function of its arguments: document text is
assembled from fixed templates and count tables, no RNG involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .indexer import DocRecord

AMBIGUOUS = "apple"
FRUIT_WORDS = ("cider", "orchard", "harvest")
TECH_WORDS = ("silicon", "keynote", "software")
MUSIC_WORDS = ("records", "vinyl", "gramophone")

# per-document word counts (w1, w2, w3); variation keeps sense clusters
# tight but not degenerate
COUNT_VARIANTS = ((5, 3, 2), (4, 4, 2), (5, 2, 3), (6, 3, 1), (4, 3, 3), (5, 4, 1))

DISTRACTOR_TOPICS = (
    ("storm", "rainfall", "thunder"),
    ("violin", "concerto", "sonata"),
    ("marathon", "sprint", "stadium"),
    ("galaxy", "nebula", "telescope"),
    ("sourdough", "oven", "flour"),
    ("glacier", "fjord", "moraine"),
    ("senate", "ballot", "precinct"),
    ("reactor", "turbine", "grid"),
    ("coral", "lagoon", "plankton"),
    ("chess", "gambit", "endgame"),
    ("opera", "libretto", "soprano"),
    ("desert", "dune", "oasis"),
)


@dataclass
class SynthCorpus:
    docs: list[DocRecord]
    queries: list[tuple[str, str]]
    qrels: dict[str, set[str]]
    fruit_doc_ids: list[str] = field(default_factory=list)
    tech_doc_ids: list[str] = field(default_factory=list)
    distractor_doc_ids: list[str] = field(default_factory=list)


def _sense_text(words: tuple[str, str, str], counts: tuple[int, int, int]) -> str:
    # interleave so chunking never separates the ambiguous token from its
    # context; no stopwords, so the whole text is signal
    bag = [AMBIGUOUS]
    for word, count in zip(words, counts):
        bag.extend([word] * count)
    return " ".join(bag)


def make_polysemy_corpus(n_docs: int = 60, sense_docs: int = 6,
                         shared_distractors: int = 20) -> SynthCorpus:
    """Corpus of ``n_docs`` documents with ``sense_docs`` per sense.

    Distractors come first so their chunk ids are lower; the first
    ``shared_distractors`` of them contain "orchard" once, creating the
    tie trap for similarity-only ranking.
    """
    n_distractors = n_docs - 2 * sense_docs
    if n_distractors < shared_distractors:
        raise ValueError("not enough documents for the requested distractor count")

    docs = []
    corpus = SynthCorpus(docs=docs, queries=[], qrels={})

    for i in range(n_distractors):
        topic = DISTRACTOR_TOPICS[i % len(DISTRACTOR_TOPICS)]
        counts = COUNT_VARIANTS[i % len(COUNT_VARIANTS)]
        words = []
        for word, count in zip(topic, counts):
            words.extend([word] * count)
        if i < shared_distractors:
            words.append("orchard")
        doc_id = f"dist{i:03d}"
        docs.append(DocRecord(doc_id, f"distractor {i}", " ".join(words)))
        corpus.distractor_doc_ids.append(doc_id)

    for i in range(sense_docs):
        doc_id = f"fruit{i:02d}"
        docs.append(DocRecord(doc_id, f"orchard notes {i}",
                              _sense_text(FRUIT_WORDS, COUNT_VARIANTS[i % len(COUNT_VARIANTS)])))
        corpus.fruit_doc_ids.append(doc_id)

    for i in range(sense_docs):
        doc_id = f"tech{i:02d}"
        docs.append(DocRecord(doc_id, f"product briefing {i}",
                              _sense_text(TECH_WORDS, COUNT_VARIANTS[i % len(COUNT_VARIANTS)])))
        corpus.tech_doc_ids.append(doc_id)

    fruit_gold = set(corpus.fruit_doc_ids)
    tech_gold = set(corpus.tech_doc_ids)
    corpus.queries = [
        ("q_fruit_0", "apple cider orchard"),
        ("q_fruit_1", "apple harvest cider"),
        ("q_fruit_2", "apple orchard harvest"),
        ("q_tech_0", "apple silicon keynote"),
        ("q_tech_1", "apple software silicon"),
        ("q_tech_2", "apple keynote software"),
        ("q_shared_0", "orchard"),
    ]
    corpus.qrels = {
        "q_fruit_0": fruit_gold, "q_fruit_1": fruit_gold, "q_fruit_2": fruit_gold,
        "q_tech_0": tech_gold, "q_tech_1": tech_gold, "q_tech_2": tech_gold,
        "q_shared_0": fruit_gold,
    }
    return corpus


def make_bulk_corpus(n_docs: int = 100, chunks_per_doc: int = 10,
                     chunk_size: int = 12) -> list[DocRecord]:
    """Deterministic filler corpus sized to a target chunk count.

    Each document cycles a handful of document-specific words plus a
    shared vocabulary, producing exactly ``chunks_per_doc`` chunks of
    ``chunk_size`` terms under a matching chunking config.
    """
    shared = [f"common{i}" for i in range(30)]
    docs = []
    for d in range(n_docs):
        own = [f"doc{d}word{j}" for j in range(6)]
        words = []
        for t in range(chunks_per_doc * chunk_size):
            if t % 3 == 0:
                words.append(own[(t // 3 + d) % len(own)])
            else:
                words.append(shared[(t * 7 + d * 13 + t // 5) % len(shared)])
        docs.append(DocRecord(f"bulk{d:04d}", f"bulk document {d}", " ".join(words)))
    return docs


def write_corpus_jsonl(path: str, docs: list[DocRecord]) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"doc_id": doc.doc_id, "title": doc.title,
                                 "text": doc.text}) + "\n")


def write_queries_jsonl(path: str, queries) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for query_id, text in queries:
            fh.write(json.dumps({"query_id": query_id, "text": text}) + "\n")


def write_qrels_tsv(path: str, qrels: dict[str, set[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for query_id in sorted(qrels):
            for doc_id in sorted(qrels[query_id]):
                fh.write(f"{query_id}\t{doc_id}\t1\n")
