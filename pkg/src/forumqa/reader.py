"""Answer extraction: the pluggable reader contract, a lexical baseline
that makes the pipeline self-sufficient, and a client for remote neural
readers speaking the wire protocol.

Wire protocol: HTTP POST {endpoint}/answer with JSON
{"question": ..., "top_k": ..., "contexts": [{"id": ..., "text": ...}]},
response {"answers": [{"context_id", "text", "start", "end", "score"}]}.
Offsets count Unicode scalar values. Every response is re-validated locally;
answers failing offset soundness are dropped with a warning.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import requests

from .preprocess import PreprocessConfig, preprocess
from .retriever import SparseIndex, retrieve
from .segment import TopicParagraph
from .sentences import sentence_spans

logger = logging.getLogger(__name__)

DEFAULT_READER_TOP_K = 10
DEFAULT_WINDOW_SENTENCES = 3
DEFAULT_MAX_INFLIGHT = 4


class ReaderError(Exception):
    pass


class ReaderTimeout(ReaderError):
    """Remote reader did not answer in time; safe to retry."""


class ReaderProtocolError(ReaderError):
    """Remote reader response violates the wire protocol."""


@dataclass
class AnswerPrediction:
    text: str
    score: float  # in [0, 1]
    paragraph_id: str
    char_start: int
    char_end: int
    retrieval_score: float | None = None


class Reader(Protocol):
    def answer(
        self, question: str, paragraphs: Sequence[TopicParagraph], top_k: int
    ) -> list[AnswerPrediction]: ...


def _validate_predictions(
    predictions: list[AnswerPrediction], contexts: dict[str, str]
) -> list[AnswerPrediction]:
    """Drop predictions whose spans do not slice their context exactly."""
    valid = []
    for p in predictions:
        ctx = contexts.get(p.paragraph_id)
        if ctx is None:
            logger.warning("dropping answer for unknown context %r", p.paragraph_id)
            continue
        if not 0 <= p.char_start <= p.char_end <= len(ctx):
            logger.warning(
                "dropping answer with out-of-bounds span (%d, %d) in %s",
                p.char_start, p.char_end, p.paragraph_id,
            )
            continue
        if ctx[p.char_start : p.char_end] != p.text:
            logger.warning(
                "dropping answer whose text does not match context slice in %s",
                p.paragraph_id,
            )
            continue
        p.score = min(1.0, max(0.0, p.score))
        valid.append(p)
    return valid


@dataclass
class BaselineReader:
    """Sentence-window reader scored by stemmed-token Jaccard overlap.

    Candidate spans are windows of 1..window_sentences consecutive
    sentences; the score is |Q & W| / |Q | W| over stemmed content-token
    sets, so it always lands in [0, 1]. Top-k non-overlapping spans are
    picked greedily by score with (paragraph_id, char_start) tie-break.
    """

    window_sentences: int = DEFAULT_WINDOW_SENTENCES
    config: PreprocessConfig = field(default_factory=PreprocessConfig)

    def answer(
        self, question: str, paragraphs: Sequence[TopicParagraph], top_k: int
    ) -> list[AnswerPrediction]:
        if top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {top_k}")
        q_tokens = set(preprocess(question, self.config))
        if not q_tokens:
            return []

        candidates: list[AnswerPrediction] = []
        for para in paragraphs:
            spans = sentence_spans(para.context)
            sent_tokens = [
                set(preprocess(para.context[s:e], self.config)) for s, e in spans
            ]
            for i in range(len(spans)):
                window: set[str] = set()
                for j in range(i, min(i + self.window_sentences, len(spans))):
                    window |= sent_tokens[j]
                    overlap = len(q_tokens & window)
                    if overlap == 0:
                        continue
                    score = overlap / len(q_tokens | window)
                    start, end = spans[i][0], spans[j][1]
                    candidates.append(
                        AnswerPrediction(
                            text=para.context[start:end],
                            score=score,
                            paragraph_id=para.paragraph_id,
                            char_start=start,
                            char_end=end,
                        )
                    )

        candidates.sort(key=lambda p: (-p.score, p.paragraph_id, p.char_start, p.char_end))
        chosen: list[AnswerPrediction] = []
        for cand in candidates:
            if len(chosen) >= top_k:
                break
            clash = any(
                c.paragraph_id == cand.paragraph_id
                and c.char_start < cand.char_end
                and cand.char_start < c.char_end
                for c in chosen
            )
            if not clash:
                chosen.append(cand)
        return chosen


@dataclass
class RemoteReader:
    """Client for a neural reader service behind the wire protocol."""

    endpoint: str
    timeout: float = 30.0
    max_inflight: int = DEFAULT_MAX_INFLIGHT
    _gate: threading.Semaphore = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._gate = threading.Semaphore(self.max_inflight)

    def answer(
        self, question: str, paragraphs: Sequence[TopicParagraph], top_k: int
    ) -> list[AnswerPrediction]:
        if top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {top_k}")
        payload = {
            "question": question,
            "top_k": top_k,
            "contexts": [{"id": p.paragraph_id, "text": p.context} for p in paragraphs],
        }
        url = self.endpoint.rstrip("/") + "/answer"
        with self._gate:
            try:
                resp = requests.post(url, json=payload, timeout=self.timeout)
            except requests.Timeout as exc:
                raise ReaderTimeout(f"reader at {url} timed out after {self.timeout}s") from exc
            except requests.RequestException as exc:
                raise ReaderError(f"reader request to {url} failed: {exc}") from exc
        if resp.status_code != 200:
            raise ReaderProtocolError(
                f"reader at {url} returned {resp.status_code}: {resp.text[:200]}"
            )
        try:
            body = resp.json()
            answers = body["answers"]
            predictions = [
                AnswerPrediction(
                    text=str(a["text"]),
                    score=float(a["score"]),
                    paragraph_id=str(a["context_id"]),
                    char_start=int(a["start"]),
                    char_end=int(a["end"]),
                )
                for a in answers
            ]
        except (ValueError, KeyError, TypeError) as exc:
            raise ReaderProtocolError(
                f"malformed reader response: {exc}; payload excerpt: {resp.text[:200]}"
            ) from exc

        contexts = {p.paragraph_id: p.context for p in paragraphs}
        valid = _validate_predictions(predictions, contexts)
        if predictions and not valid:
            logger.warning(
                "remote reader returned %d answers, all dropped by validation",
                len(predictions),
            )
        valid.sort(key=lambda p: (-p.score, p.paragraph_id, p.char_start))
        return valid[:top_k]


def ask(
    index: SparseIndex,
    paragraphs_by_id: dict[str, TopicParagraph],
    reader: Reader,
    question: str,
    retriever_k: int = 35,
    reader_k: int = DEFAULT_READER_TOP_K,
    config: PreprocessConfig | None = None,
) -> list[AnswerPrediction]:
    """Retrieve top retriever_k paragraphs, read them, return the reader's
    top reader_k predictions annotated with retrieval scores."""
    result = retrieve(index, question, retriever_k, config)
    if not result.ranked:
        return []
    retrieval_score = dict(result.ranked)
    candidates = [paragraphs_by_id[pid] for pid, _ in result.ranked if pid in paragraphs_by_id]
    predictions = reader.answer(question, candidates, reader_k)
    contexts = {p.paragraph_id: p.context for p in candidates}
    predictions = _validate_predictions(list(predictions), contexts)
    for p in predictions:
        p.retrieval_score = retrieval_score.get(p.paragraph_id)
    return predictions[:reader_k]


def format_answers(predictions: Sequence[AnswerPrediction]) -> str:
    """Slash-separated top answers, the shape used for CLI output."""
    return "/".join(p.text.strip() for p in predictions)


def predictions_to_json(predictions: Sequence[AnswerPrediction]) -> str:
    return json.dumps(
        [
            {
                "text": p.text,
                "score": p.score,
                "paragraph_id": p.paragraph_id,
                "char_start": p.char_start,
                "char_end": p.char_end,
                "retrieval_score": p.retrieval_score,
            }
            for p in predictions
        ],
        ensure_ascii=False,
        indent=1,
    )
