"""Bag-of-words preprocessing: tokenize, stem, prune, vectorize.

The same tokenizer/stemmer config is reused verbatim for retrieval queries,
so the preprocessing config carries a stable hash that downstream artifacts
embed to detect mismatches.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Iterator, Sequence

from . import porter

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def load_default_stopwords() -> frozenset[str]:
    text = resources.files("forumqa.data").joinpath("stopwords.txt").read_text("utf-8")
    return parse_stopwords(text)


def parse_stopwords(text: str) -> frozenset[str]:
    terms = set()
    for line in text.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            terms.add(line)
    return frozenset(terms)


@dataclass(frozen=True)
class PreprocessConfig:
    """Tokenizer + pruning parameters; hash ties artifacts together."""

    stopwords: frozenset[str] = field(default_factory=load_default_stopwords)
    stem_tokens: bool = True
    min_df: int = 5
    max_df_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.min_df < 1:
            raise ValueError(f"min_df must be >= 1, got {self.min_df}")
        if not 0 < self.max_df_fraction <= 1:
            raise ValueError(
                f"max_df_fraction must be in (0, 1], got {self.max_df_fraction}"
            )

    def config_hash(self) -> str:
        payload = json.dumps(
            {
                "stopwords": sorted(self.stopwords),
                "stem_tokens": self.stem_tokens,
                "tokenizer": "unicode-words-v1",
                "stemmer": "porter" if self.stem_tokens else "none",
            },
            sort_keys=True,
        ).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]


def tokenize(text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Lowercase word tokens with punctuation, numbers, and stopwords removed."""
    if stopwords is None:
        stopwords = load_default_stopwords()
    out = []
    for m in _TOKEN.finditer(text.lower()):
        tok = m.group()
        if tok.isnumeric():
            continue
        if tok in stopwords:
            continue
        out.append(tok)
    return out


def stem(token: str) -> str:
    """Reduce a lowercase token to its Porter root."""
    return porter.stem(token)


def preprocess(text: str, config: PreprocessConfig) -> list[str]:
    """tokenize + (optionally) stem, under one config."""
    toks = tokenize(text, config.stopwords)
    if config.stem_tokens:
        toks = [porter.stem(t) for t in toks]
    return toks


@dataclass
class Vocabulary:
    """Dense, lexicographically ordered term <-> id mapping with doc freqs."""

    term_to_id: dict[str, int]
    id_to_term: list[str]
    doc_freq: list[int]

    def __len__(self) -> int:
        return len(self.id_to_term)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_id

    def to_tsv(self) -> str:
        lines = [
            f"{term}\t{i}\t{self.doc_freq[i]}"
            for i, term in enumerate(self.id_to_term)
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_tsv(cls, text: str) -> "Vocabulary":
        term_to_id: dict[str, int] = {}
        id_to_term: list[str] = []
        doc_freq: list[int] = []
        for line in text.splitlines():
            if not line.strip():
                continue
            term, tid, df = line.split("\t")
            if int(tid) != len(id_to_term):
                raise ValueError(f"non-dense term id {tid} for {term!r}")
            term_to_id[term] = int(tid)
            id_to_term.append(term)
            doc_freq.append(int(df))
        return cls(term_to_id, id_to_term, doc_freq)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_tsv().encode("utf-8")).hexdigest()[:16]


@dataclass
class BowDocument:
    doc_id: str
    token_ids: list[int]

    def to_json(self) -> str:
        return json.dumps(
            {"doc_id": self.doc_id, "token_ids": self.token_ids},
            ensure_ascii=False,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "BowDocument":
        obj = json.loads(line)
        return cls(doc_id=obj["doc_id"], token_ids=list(obj["token_ids"]))


def build_vocabulary(
    docs: Iterable[Sequence[str]], min_df: int = 5, max_df_fraction: float = 0.5
) -> Vocabulary:
    """Vocabulary of terms with document frequency in [min_df, max_df_fraction*D].

    Ids are assigned in lexicographic term order so rebuilds are byte-identical.
    """
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")
    if not 0 < max_df_fraction <= 1:
        raise ValueError(f"max_df_fraction must be in (0, 1], got {max_df_fraction}")
    df: dict[str, int] = {}
    n_docs = 0
    for doc in docs:
        n_docs += 1
        for term in set(doc):
            df[term] = df.get(term, 0) + 1
    max_df = max_df_fraction * n_docs
    kept = sorted(t for t, f in df.items() if min_df <= f <= max_df)
    return Vocabulary(
        term_to_id={t: i for i, t in enumerate(kept)},
        id_to_term=kept,
        doc_freq=[df[t] for t in kept],
    )


def vectorize(doc_id: str, tokens: Sequence[str], vocab: Vocabulary) -> BowDocument:
    """Map tokens to term ids, dropping out-of-vocabulary tokens, order kept."""
    ids = [vocab.term_to_id[t] for t in tokens if t in vocab.term_to_id]
    return BowDocument(doc_id=doc_id, token_ids=ids)


def iter_bow_file(lines: Iterable[str]) -> Iterator[BowDocument]:
    for line in lines:
        if line.strip():
            yield BowDocument.from_json(line)
