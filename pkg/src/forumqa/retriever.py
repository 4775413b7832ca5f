"""Sparse BM25 retrieval over topic paragraphs.

Scoring uses BM25 with k1=1.5, b=0.75 and the non-negative idf form
idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Queries are preprocessed with
the exact tokenizer/stemmer config the index was built with; the index
embeds that config's hash and refuses to load under a different one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dataset import QADataset
from .preprocess import PreprocessConfig, preprocess
from .segment import TopicParagraph

BM25_K1 = 1.5
BM25_B = 0.75
DEFAULT_RETRIEVER_TOP_K = 35


class IndexConfigMismatch(Exception):
    """Index was built under a different preprocessing config."""


@dataclass
class RetrievalResult:
    ranked: list[tuple[str, float]]  # (paragraph_id, score), scores non-increasing
    k: int
    empty_query: bool = False

    def ids(self) -> list[str]:
        return [pid for pid, _ in self.ranked]


@dataclass
class SparseIndex:
    """Immutable inverted index: term -> postings of (paragraph_id, tf)."""

    postings: dict[str, list[tuple[str, int]]]
    lengths: dict[str, int]
    avg_length: float
    n_paragraphs: int
    config_hash: str
    zero_token_paragraphs: list[str] = field(default_factory=list)

    def document_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def to_json(self) -> str:
        return json.dumps(
            {
                "config_hash": self.config_hash,
                "n_paragraphs": self.n_paragraphs,
                "avg_length": self.avg_length,
                "lengths": self.lengths,
                "postings": {t: p for t, p in sorted(self.postings.items())},
                "zero_token_paragraphs": self.zero_token_paragraphs,
            },
            ensure_ascii=False,
            separators=(",", ":"),
            sort_keys=False,
        )

    @classmethod
    def from_json(cls, text: str, expected_config: PreprocessConfig | None = None) -> "SparseIndex":
        obj = json.loads(text)
        if expected_config is not None and obj["config_hash"] != expected_config.config_hash():
            raise IndexConfigMismatch(
                f"index built with preprocessing config {obj['config_hash']}, "
                f"loader has {expected_config.config_hash()}"
            )
        return cls(
            postings={t: [(pid, int(tf)) for pid, tf in plist] for t, plist in obj["postings"].items()},
            lengths={pid: int(n) for pid, n in obj["lengths"].items()},
            avg_length=float(obj["avg_length"]),
            n_paragraphs=int(obj["n_paragraphs"]),
            config_hash=obj["config_hash"],
            zero_token_paragraphs=list(obj.get("zero_token_paragraphs", [])),
        )


def build_index(
    paragraphs: Sequence[TopicParagraph], config: PreprocessConfig | None = None
) -> SparseIndex:
    """Index every paragraph; stopword-only paragraphs are indexed with zero
    postings and reported on the index."""
    if config is None:
        config = PreprocessConfig()
    postings: dict[str, dict[str, int]] = {}
    lengths: dict[str, int] = {}
    zero_token: list[str] = []
    for para in sorted(paragraphs, key=lambda p: p.paragraph_id):
        tokens = preprocess(para.context, config)
        lengths[para.paragraph_id] = len(tokens)
        if not tokens:
            zero_token.append(para.paragraph_id)
            continue
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        for t, tf in counts.items():
            postings.setdefault(t, {})[para.paragraph_id] = tf
    n = len(lengths)
    avg = (sum(lengths.values()) / n) if n else 0.0
    return SparseIndex(
        postings={t: sorted(p.items()) for t, p in postings.items()},
        lengths=lengths,
        avg_length=avg,
        n_paragraphs=n,
        config_hash=config.config_hash(),
        zero_token_paragraphs=zero_token,
    )


def bm25_idf(n_paragraphs: int, doc_freq: int) -> float:
    return math.log(1.0 + (n_paragraphs - doc_freq + 0.5) / (doc_freq + 0.5))


def retrieve(
    index: SparseIndex,
    query: str,
    k: int = DEFAULT_RETRIEVER_TOP_K,
    config: PreprocessConfig | None = None,
) -> RetrievalResult:
    """Top-k paragraphs by BM25; ties break by paragraph_id ascending."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if config is None:
        config = PreprocessConfig()
    if config.config_hash() != index.config_hash:
        raise IndexConfigMismatch(
            f"query preprocessing config {config.config_hash()} does not match "
            f"index config {index.config_hash}"
        )
    terms = preprocess(query, config)
    if not terms:
        return RetrievalResult(ranked=[], k=k, empty_query=True)

    scores: dict[str, float] = {}
    for term in terms:
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = bm25_idf(index.n_paragraphs, len(plist))
        for pid, tf in plist:
            norm = 1.0 - BM25_B + BM25_B * index.lengths[pid] / index.avg_length
            scores[pid] = scores.get(pid, 0.0) + idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * norm)

    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    if len(ranked) < min(k, index.n_paragraphs):
        # Pad with unmatched paragraphs at score 0 so k=N always covers the
        # whole collection (recall(k=N) = 1 is an interface guarantee).
        matched = set(scores)
        for pid in sorted(index.lengths):
            if len(ranked) >= min(k, index.n_paragraphs):
                break
            if pid not in matched:
                ranked.append((pid, 0.0))
    return RetrievalResult(ranked=ranked, k=k)


@dataclass
class RecallReport:
    recall: float
    hits: int
    total: int
    misses: list[str] = field(default_factory=list)  # qids
    unindexed: list[str] = field(default_factory=list)  # qids with unknown gold


def retriever_recall(
    index: SparseIndex,
    dataset: QADataset,
    k: int = DEFAULT_RETRIEVER_TOP_K,
    config: PreprocessConfig | None = None,
) -> RecallReport:
    """Fraction of questions whose gold paragraph appears in the top-k.

    Binary per question; questions whose gold paragraph is not indexed count
    as misses and are listed separately.
    """
    hits = 0
    total = 0
    misses: list[str] = []
    unindexed: list[str] = []
    for para, qa in dataset.iter_qas():
        total += 1
        if para.paragraph_id not in index.lengths:
            unindexed.append(qa.qid)
            misses.append(qa.qid)
            continue
        result = retrieve(index, qa.question, k, config)
        if para.paragraph_id in result.ids():
            hits += 1
        else:
            misses.append(qa.qid)
    recall = hits / total if total else 0.0
    return RecallReport(recall=recall, hits=hits, total=total, misses=misses, unindexed=unindexed)
