"""Latent Dirichlet Allocation via collapsed Gibbs sampling.

A single chain resamples every token's topic from the collapsed
conditional p(z_i = k | z_-i, w) proportional to
(n_dk + alpha) * (n_kw + beta) / (n_k + V*beta), with token i's current
assignment removed from the counts. The per-token loop is JIT-compiled;
one chain is strictly sequential, but independent chains with different
seeds may run in parallel processes.

Point estimates use counts averaged over post-burn-in sweeps:
theta_dk = (avg n_dk + alpha) / (N_d + K*alpha),
phi_kw  = (avg n_kw + beta) / (avg n_k + V*beta).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .porter import stem as porter_stem
from .preprocess import BowDocument, Vocabulary


@dataclass(frozen=True)
class LdaConfig:
    n_topics: int = 35
    alpha: float | None = None  # None -> 50 / n_topics
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_topics < 1:
            raise ValueError(f"n_topics must be >= 1, got {self.n_topics}")
        if self.effective_alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError(
                f"burn_in must be in [0, iterations), got {self.burn_in}/{self.iterations}"
            )

    @property
    def effective_alpha(self) -> float:
        return 50.0 / self.n_topics if self.alpha is None else self.alpha

    def to_dict(self) -> dict:
        return {
            "n_topics": self.n_topics,
            "alpha": self.alpha,
            "beta": self.beta,
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LdaConfig":
        return cls(**obj)


@njit(cache=True)
def _seed_rng(seed):
    np.random.seed(seed)


@njit(cache=True)
def _init_assignments(n_tokens, n_topics):
    z = np.empty(n_tokens, dtype=np.int32)
    for i in range(n_tokens):
        z[i] = np.random.randint(0, n_topics)
    return z


@njit(cache=True)
def _resample_token(i, doc_ids, word_ids, z, n_dk, n_kw, n_k, alpha, beta, vbeta, cum):
    K = n_k.shape[0]
    d = doc_ids[i]
    w = word_ids[i]
    k = z[i]
    n_dk[d, k] -= 1
    n_kw[k, w] -= 1
    n_k[k] -= 1
    total = 0.0
    for kk in range(K):
        total += (n_dk[d, kk] + alpha) * (n_kw[kk, w] + beta) / (n_k[kk] + vbeta)
        cum[kk] = total
    r = np.random.random() * total
    new_k = 0
    while r > cum[new_k]:
        new_k += 1
    z[i] = new_k
    n_dk[d, new_k] += 1
    n_kw[new_k, w] += 1
    n_k[new_k] += 1
    return new_k


@njit(cache=True)
def _sweep(doc_ids, word_ids, z, n_dk, n_kw, n_k, alpha, beta, vbeta, cum):
    for i in range(z.shape[0]):
        _resample_token(i, doc_ids, word_ids, z, n_dk, n_kw, n_k, alpha, beta, vbeta, cum)


class GibbsSampler:
    """Mutable collapsed Gibbs chain over a flattened token stream.

    Exposed for step-level tests and for callers that need the chain state
    after every sweep; fit_lda drives it for the common case.
    """

    def __init__(self, bow_docs: Sequence[BowDocument], vocab_size: int, config: LdaConfig):
        nonempty = [d for d in bow_docs if d.token_ids]
        self.skipped_doc_ids = [d.doc_id for d in bow_docs if not d.token_ids]
        if not nonempty:
            raise ValueError("corpus has no documents with tokens")
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        self.config = config
        self.doc_ids = [d.doc_id for d in nonempty]
        self.vocab_size = vocab_size

        K = config.n_topics
        self.doc_of_token = np.concatenate(
            [np.full(len(d.token_ids), i, dtype=np.int32) for i, d in enumerate(nonempty)]
        )
        self.word_of_token = np.concatenate(
            [np.asarray(d.token_ids, dtype=np.int32) for d in nonempty]
        )
        if self.word_of_token.max() >= vocab_size:
            raise ValueError("token id out of vocabulary range")

        self._cum = np.empty(K, dtype=np.float64)
        _seed_rng(config.seed)
        self.z = _init_assignments(len(self.word_of_token), K)
        self.n_dk = np.zeros((len(nonempty), K), dtype=np.int32)
        self.n_kw = np.zeros((K, vocab_size), dtype=np.int32)
        self.n_k = np.zeros(K, dtype=np.int32)
        np.add.at(self.n_dk, (self.doc_of_token, self.z), 1)
        np.add.at(self.n_kw, (self.z, self.word_of_token), 1)
        np.add.at(self.n_k, self.z, 1)

    @property
    def n_tokens(self) -> int:
        return len(self.z)

    def sweep(self) -> None:
        """Resample every token once, in stream order."""
        cfg = self.config
        _sweep(
            self.doc_of_token, self.word_of_token, self.z,
            self.n_dk, self.n_kw, self.n_k,
            cfg.effective_alpha, cfg.beta, self.vocab_size * cfg.beta, self._cum,
        )

    def step(self, token_index: int) -> int:
        """Resample one token (decrement, sample, re-increment); returns the
        new topic. Counts stay conserved."""
        cfg = self.config
        return int(
            _resample_token(
                token_index, self.doc_of_token, self.word_of_token, self.z,
                self.n_dk, self.n_kw, self.n_k,
                cfg.effective_alpha, cfg.beta, self.vocab_size * cfg.beta, self._cum,
            )
        )

    def conditional_weights(self, token_index: int) -> np.ndarray:
        """Unnormalized sampling weights for a token, with its current
        assignment decremented; pure (state restored)."""
        cfg = self.config
        d = self.doc_of_token[token_index]
        w = self.word_of_token[token_index]
        k = self.z[token_index]
        self.n_dk[d, k] -= 1
        self.n_kw[k, w] -= 1
        self.n_k[k] -= 1
        weights = (
            (self.n_dk[d] + cfg.effective_alpha)
            * (self.n_kw[:, w] + cfg.beta)
            / (self.n_k + self.vocab_size * cfg.beta)
        )
        self.n_dk[d, k] += 1
        self.n_kw[k, w] += 1
        self.n_k[k] += 1
        return weights

    def check_counts(self) -> None:
        """Raise AssertionError if the count matrices drifted from z."""
        assert int(self.n_k.sum()) == self.n_tokens
        assert (self.n_dk.sum(axis=1) == np.bincount(
            self.doc_of_token, minlength=self.n_dk.shape[0])).all()
        assert (self.n_kw.sum(axis=1) == self.n_k).all()


@dataclass
class TopicModel:
    """Fitted LDA state: chain assignments, counts, and point estimates."""

    config: LdaConfig
    doc_ids: list[str]
    skipped_doc_ids: list[str]
    vocab_hash: str
    theta: np.ndarray  # D x K, rows sum to 1
    phi: np.ndarray  # K x V, rows sum to 1
    aspects: list["TopicAspects"] = field(default_factory=list)
    _doc_index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._doc_index:
            self._doc_index = {d: i for i, d in enumerate(self.doc_ids)}

    @property
    def n_topics(self) -> int:
        return self.config.n_topics

    def dominant_topic(self, doc_id: str) -> int:
        """argmax_k theta[d, k]; ties break toward the smallest topic id."""
        if doc_id not in self._doc_index:
            raise KeyError(f"document {doc_id!r} was not in the training corpus")
        return int(np.argmax(self.theta[self._doc_index[doc_id]]))

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config.to_dict(),
                "vocab_hash": self.vocab_hash,
                "doc_ids": self.doc_ids,
                "skipped_doc_ids": self.skipped_doc_ids,
                "theta": self.theta.tolist(),
                "phi": self.phi.tolist(),
                "aspects": [a.to_dict() for a in self.aspects],
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, text: str) -> "TopicModel":
        obj = json.loads(text)
        return cls(
            config=LdaConfig.from_dict(obj["config"]),
            doc_ids=list(obj["doc_ids"]),
            skipped_doc_ids=list(obj["skipped_doc_ids"]),
            vocab_hash=obj["vocab_hash"],
            theta=np.asarray(obj["theta"], dtype=np.float64),
            phi=np.asarray(obj["phi"], dtype=np.float64),
            aspects=[TopicAspects.from_dict(a) for a in obj["aspects"]],
        )


@dataclass
class TopicAspects:
    topic_id: int
    aspects: list[str]

    def to_dict(self) -> dict:
        return {"topic_id": self.topic_id, "aspects": self.aspects}

    @classmethod
    def from_dict(cls, obj: dict) -> "TopicAspects":
        return cls(topic_id=int(obj["topic_id"]), aspects=list(obj["aspects"]))


def fit_lda(
    bow_docs: Sequence[BowDocument],
    vocab_size: int,
    config: LdaConfig,
    vocab_hash: str = "",
) -> TopicModel:
    """Run the seeded Gibbs chain and estimate theta/phi from post-burn-in
    count averages. Documents with zero tokens are excluded and listed on
    the model's skip report."""
    sampler = GibbsSampler(bow_docs, vocab_size, config)
    K = config.n_topics
    alpha = config.effective_alpha
    beta = config.beta

    theta_acc = np.zeros_like(sampler.n_dk, dtype=np.float64)
    phi_acc = np.zeros_like(sampler.n_kw, dtype=np.float64)
    kept = 0
    for it in range(config.iterations):
        sampler.sweep()
        if it >= config.burn_in:
            theta_acc += sampler.n_dk
            phi_acc += sampler.n_kw
            kept += 1
    theta_acc /= kept
    phi_acc /= kept

    doc_lengths = sampler.n_dk.sum(axis=1, keepdims=True)
    theta = (theta_acc + alpha) / (doc_lengths + K * alpha)
    phi = (phi_acc + beta) / (phi_acc.sum(axis=1, keepdims=True) + vocab_size * beta)
    return TopicModel(
        config=config,
        doc_ids=sampler.doc_ids,
        skipped_doc_ids=sampler.skipped_doc_ids,
        vocab_hash=vocab_hash,
        theta=theta,
        phi=phi,
    )


# ---------------------------------------------------------------------------
# Aspects


def corpus_surface_stats(
    tokenized_docs: Iterable[Sequence[str]],
) -> tuple[dict[str, Counter], Counter]:
    """From unstemmed token streams: per-stem surface form counts and
    adjacent-stem bigram counts."""
    surface: dict[str, Counter] = {}
    bigrams: Counter = Counter()
    for tokens in tokenized_docs:
        stems = [porter_stem(t) for t in tokens]
        for tok, st in zip(tokens, stems):
            surface.setdefault(st, Counter())[tok] += 1
        for a, b in zip(stems, stems[1:]):
            bigrams[(a, b)] += 1
    return surface, bigrams


def _surface_form(stem_str: str, surface: dict[str, Counter]) -> str:
    forms = surface.get(stem_str)
    if not forms:
        return stem_str
    # Most frequent surface form; ties break lexicographically.
    return min(forms.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def extract_aspects(
    model: TopicModel,
    vocab: Vocabulary,
    tokenized_docs: Iterable[Sequence[str]],
    aspects_per_topic: int = 9,
    bigram_threshold: int = 25,
) -> list[TopicAspects]:
    """Rank each topic's aspects: top phi terms, with high-frequency adjacent
    bigrams merged when both member stems rank in the topic's top
    3*aspects_per_topic terms. Aspects are de-stemmed to their most frequent
    surface form."""
    if aspects_per_topic < 1:
        raise ValueError("aspects_per_topic must be >= 1")
    if aspects_per_topic > len(vocab):
        raise ValueError(
            f"aspects_per_topic={aspects_per_topic} exceeds vocabulary size {len(vocab)}"
        )
    surface, bigrams = corpus_surface_stats(tokenized_docs)

    out = []
    for k in range(model.n_topics):
        order = np.lexsort((np.arange(len(vocab)), -model.phi[k]))
        ranked = [vocab.id_to_term[i] for i in order]
        pool = set(ranked[: 3 * aspects_per_topic])
        used: set[str] = set()
        aspects: list[str] = []
        for s in ranked:
            if len(aspects) >= aspects_per_topic:
                break
            if s in used:
                continue
            best: tuple[int, str, tuple[str, str]] | None = None
            if s in pool:
                for (a, b), freq in bigrams.items():
                    if freq < bigram_threshold:
                        continue
                    if s not in (a, b):
                        continue
                    other = b if a == s else a
                    if other == s or other in used or other not in pool:
                        continue
                    text = f"{_surface_form(a, surface)} {_surface_form(b, surface)}"
                    cand = (freq, text, (a, b))
                    if best is None or (cand[0], cand[1]) > (best[0], best[1]):
                        best = cand
            if best is not None:
                _, text, (a, b) = best
                used.update((a, b))
                if text not in aspects:
                    aspects.append(text)
            else:
                used.add(s)
                text = _surface_form(s, surface)
                if text not in aspects:
                    aspects.append(text)
        out.append(TopicAspects(topic_id=k, aspects=aspects))
    return out
