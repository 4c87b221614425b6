"""First-stage BM25 retrieval with a pluggable second-stage reranker.

The index stores classic Okapi statistics over each document's title
concatenated with its abstract sentences. Scoring uses the non-negative
idf variant

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))

and the usual saturation/length-normalization term

    tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avglen)).

Query tokens are scored as given: a token appearing twice in the claim
contributes twice. Ties are always broken by ascending doc_id so results
are reproducible across runs and machines.

The per-term accumulation loop is the hot path at corpus scale; it runs in
a compiled kernel when available (see claimcheck._kernels).
"""

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from claimcheck._kernels import accumulate_term
from claimcheck.data import Claim, Corpus
from claimcheck.errors import DataValidationError, RerankError
from claimcheck.text import ANALYZER_VERSION, tokenize

INDEX_FORMAT_VERSION = 1

# claim text, document text (title + abstract) -> relevance score
PairScorer = Callable[[str, str], float]


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0:
            raise DataValidationError(f"k1 must be >= 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise DataValidationError(f"b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class RankedList:
    claim_id: int
    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        doc_ids = [doc_id for doc_id, _ in self.entries]
        if len(doc_ids) != len(set(doc_ids)):
            raise DataValidationError(f"claim {self.claim_id}: duplicate doc in ranked list")

    @property
    def doc_ids(self) -> list[int]:
        return [doc_id for doc_id, _ in self.entries]


class InvertedIndex:
    """BM25 statistics plus dense scoring arrays.

    Immutable after construction. postings map term -> [(doc_id, tf), ...]
    sorted by doc_id; doc_lengths map doc_id -> token count.
    """

    def __init__(self, postings, doc_lengths, params: Bm25Params,
                 analyzer_version: str = ANALYZER_VERSION):
        if not doc_lengths:
            raise DataValidationError("cannot build an index over an empty corpus")
        self.postings = postings
        self.doc_lengths = doc_lengths
        self.params = params
        self.analyzer_version = analyzer_version
        self.num_docs = len(doc_lengths)
        self.avg_doc_length = sum(doc_lengths.values()) / self.num_docs
        for term, posting in postings.items():
            for doc_id, _ in posting:
                if doc_id not in doc_lengths:
                    raise DataValidationError(f"posting for {term!r} references unknown doc {doc_id}")
        # Dense structures for the scoring kernel: row i holds the i-th
        # smallest doc_id.
        self._doc_ids = np.array(sorted(doc_lengths), dtype=np.int64)
        self._row_of = {doc_id: row for row, doc_id in enumerate(self._doc_ids)}
        lengths = np.array([doc_lengths[d] for d in self._doc_ids], dtype=np.float64)
        k1, b = params.k1, params.b
        self._norm = k1 * (1.0 - b + b * lengths / self.avg_doc_length)
        self._term_rows = {}
        self._term_tfs = {}
        for term, posting in postings.items():
            self._term_rows[term] = np.array(
                [self._row_of[doc_id] for doc_id, _ in posting], dtype=np.int32
            )
            self._term_tfs[term] = np.array([tf for _, tf in posting], dtype=np.float64)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.num_docs - df + 0.5) / (df + 0.5))

    def score_all(self, query_terms: list[str]) -> np.ndarray:
        """BM25 scores for every indexed document, row-aligned with doc_ids."""
        scores = np.zeros(self.num_docs, dtype=np.float64)
        k1_plus_1 = self.params.k1 + 1.0
        for term in query_terms:
            rows = self._term_rows.get(term)
            if rows is None:
                continue
            accumulate_term(scores, self._norm, rows, self._term_tfs[term], self.idf(term), k1_plus_1)
        return scores

    def row_doc_ids(self) -> np.ndarray:
        return self._doc_ids


def build_index(corpus: Corpus, params: Bm25Params = Bm25Params()) -> InvertedIndex:
    """Index title + abstract of every document."""
    if len(corpus) == 0:
        raise DataValidationError("cannot build an index over an empty corpus")
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: dict[int, int] = {}
    for doc_id in sorted(d.doc_id for d in corpus):
        tokens = tokenize(corpus[doc_id].text())
        doc_lengths[doc_id] = len(tokens)
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((doc_id, tf))
    return InvertedIndex(postings=postings, doc_lengths=doc_lengths, params=params)


def bm25_score(index: InvertedIndex, query_terms: list[str], doc_id: int) -> float:
    """Score one document; terms absent from it contribute 0."""
    if doc_id not in index.doc_lengths:
        raise KeyError(f"doc_id {doc_id} not indexed")
    row = index._row_of[doc_id]
    norm = index._norm[row]
    k1_plus_1 = index.params.k1 + 1.0
    score = 0.0
    for term in query_terms:
        rows = index._term_rows.get(term)
        if rows is None:
            continue
        pos = int(np.searchsorted(rows, row))
        if pos == len(rows) or rows[pos] != row:
            continue
        tf = index._term_tfs[term][pos]
        score += index.idf(term) * (tf * k1_plus_1) / (tf + norm)
    return score


def retrieve(index: InvertedIndex, claim: Claim, k: int) -> RankedList:
    """Top-k documents for the claim's tokens, ties by ascending doc_id.

    Every indexed document is a candidate, so an out-of-vocabulary claim
    yields the first k doc_ids with score 0.
    """
    if k < 1:
        raise DataValidationError(f"k must be >= 1, got {k}")
    scores = index.score_all(tokenize(claim.text))
    # stable argsort on -scores keeps ascending doc_id among ties
    order = np.argsort(-scores, kind="stable")[:k]
    entries = tuple((int(index._doc_ids[row]), float(scores[row])) for row in order)
    return RankedList(claim_id=claim.claim_id, entries=entries)


def rerank(ranked: RankedList, claim: Claim, corpus: Corpus,
           scorer: PairScorer, depth: int) -> RankedList:
    """Reorder the first `depth` entries by scorer score, descending.

    Ties keep the original rank; entries past `depth` are untouched. Head
    entries carry the scorer's scores, the tail keeps its original ones.
    """
    if not 0 <= depth <= len(ranked.entries):
        raise DataValidationError(
            f"depth {depth} out of range for ranked list of {len(ranked.entries)}"
        )
    head = []
    for rank, (doc_id, _) in enumerate(ranked.entries[:depth]):
        try:
            score = float(scorer(claim.text, corpus[doc_id].text()))
        except Exception as exc:
            raise RerankError(claim.claim_id, doc_id, exc) from exc
        head.append((rank, doc_id, score))
    head.sort(key=lambda item: (-item[2], item[0]))
    entries = tuple((doc_id, score) for _, doc_id, score in head) + ranked.entries[depth:]
    return RankedList(claim_id=ranked.claim_id, entries=entries)


def save_index(index: InvertedIndex, path) -> None:
    """Persist as a single versioned JSON file with sorted keys."""
    payload = {
        "version": INDEX_FORMAT_VERSION,
        "params": {"k1": index.params.k1, "b": index.params.b},
        "analyzer_version": index.analyzer_version,
        "num_docs": index.num_docs,
        "avg_doc_length": index.avg_doc_length,
        "doc_lengths": {str(doc_id): length for doc_id, length in index.doc_lengths.items()},
        "postings": {
            term: [[doc_id, tf] for doc_id, tf in posting]
            for term, posting in index.postings.items()
        },
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=False, sort_keys=True)
        handle.write("\n")


def load_index(path) -> InvertedIndex:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    version = payload.get("version")
    if version != INDEX_FORMAT_VERSION:
        raise DataValidationError(f"unsupported index version {version!r}")
    analyzer = payload["analyzer_version"]
    if analyzer != ANALYZER_VERSION:
        raise DataValidationError(
            f"index built with analyzer {analyzer!r}, library uses {ANALYZER_VERSION!r}"
        )
    params = Bm25Params(**payload["params"])
    doc_lengths = {int(doc_id): int(length) for doc_id, length in payload["doc_lengths"].items()}
    postings = {
        term: [(int(doc_id), int(tf)) for doc_id, tf in posting]
        for term, posting in payload["postings"].items()
    }
    index = InvertedIndex(postings=postings, doc_lengths=doc_lengths, params=params,
                          analyzer_version=analyzer)
    if index.num_docs != int(payload["num_docs"]):
        raise DataValidationError("index file num_docs inconsistent with doc_lengths")
    if not math.isclose(index.avg_doc_length, float(payload["avg_doc_length"]), rel_tol=1e-12):
        raise DataValidationError("index file avg_doc_length inconsistent with doc_lengths")
    return index
