"""EM and token-level precision/recall/F1 over n-way gold answers, plus
retriever recall and Table-shaped experiment reports.

Token counting: predictions and golds are normalized (lowercase, strip
punctuation, drop the articles a/an/the, whitespace-split) and compared as
token multisets; TP is the multiset intersection size, FP the surplus
prediction tokens, FN the surplus gold tokens. The gold maximizing F1 is
the one reported per question. Token precision (Eq.-style) and the
reader's mean confidence are reported as separate columns because the two
notions are distinct.
"""

from __future__ import annotations

import json
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .dataset import QADataset
from .preprocess import PreprocessConfig
from .reader import Reader, ask
from .retriever import SparseIndex, retriever_recall
from .segment import TopicParagraph

_ARTICLES = {"a", "an", "the"}
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> list[str]:
    """Lowercase, strip punctuation, drop articles, whitespace-split."""
    tokens = text.lower().translate(_PUNCT_TABLE).split()
    return [t for t in tokens if t not in _ARTICLES]


def exact_match(prediction: str, gold_answers: Sequence[str]) -> int:
    """1 iff the normalized prediction equals any normalized gold."""
    if not gold_answers:
        raise ValueError("exact_match requires at least one gold answer")
    pred = normalize_answer(prediction)
    return int(any(pred == normalize_answer(g) for g in gold_answers))


def _prf_against(pred_tokens: list[str], gold_tokens: list[str]) -> tuple[float, float, float]:
    common = Counter(pred_tokens) & Counter(gold_tokens)
    tp = sum(common.values())
    if tp == 0:
        return 0.0, 0.0, 0.0
    precision = tp / len(pred_tokens)
    recall = tp / len(gold_tokens)
    f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def token_f1(
    prediction: str, gold_answers: Sequence[str]
) -> tuple[float, float, float]:
    """(precision, recall, f1) against the gold that maximizes F1."""
    if not gold_answers:
        raise ValueError("token_f1 requires at least one gold answer")
    pred_tokens = normalize_answer(prediction)
    best = (0.0, 0.0, 0.0)
    for gold in gold_answers:
        prf = _prf_against(pred_tokens, normalize_answer(gold))
        if prf[2] > best[2]:
            best = prf
    return best


@dataclass
class QuestionRecord:
    qid: str
    em: int
    precision: float
    recall: float
    f1: float
    confidence: float
    prediction: str
    best_gold_matched: str
    flagged: bool = False  # no prediction produced


@dataclass
class MetricReport:
    model_name: str
    records: list[QuestionRecord]
    retriever_recall: float
    config_snapshot: dict
    split_id: str = ""
    # Set when the report wraps published aggregate values instead of
    # per-question records (compare_runs on static table rows).
    static_metrics: dict[str, float] | None = None

    @property
    def em(self) -> float:
        return self._mean(lambda r: r.em)

    @property
    def precision(self) -> float:
        return self._mean(lambda r: r.precision)

    @property
    def recall(self) -> float:
        return self._mean(lambda r: r.recall)

    @property
    def f1(self) -> float:
        return self._mean(lambda r: r.f1)

    @property
    def mean_confidence(self) -> float:
        return self._mean(lambda r: r.confidence)

    def _mean(self, key: Callable[[QuestionRecord], float]) -> float:
        if not self.records:
            return 0.0
        return sum(key(r) for r in self.records) / len(self.records)

    def metrics(self) -> dict[str, float]:
        """Aggregate columns, named as in the experiments table."""
        if self.static_metrics is not None:
            return dict(self.static_metrics)
        return {
            "Precision": self.precision,
            "F1": self.f1,
            "Recall": self.recall,
            "EM": self.em,
            "RetrieverRecall": self.retriever_recall,
            "MeanConfidence": self.mean_confidence,
        }

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model_name,
                "split_id": self.split_id,
                "metrics": self.metrics(),
                "config": self.config_snapshot,
                "per_question": [
                    {
                        "qid": r.qid,
                        "em": r.em,
                        "precision": r.precision,
                        "recall": r.recall,
                        "f1": r.f1,
                        "confidence": r.confidence,
                        "prediction": r.prediction,
                        "best_gold_matched": r.best_gold_matched,
                        "flagged": r.flagged,
                    }
                    for r in self.records
                ],
            },
            ensure_ascii=False,
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        obj = json.loads(text)
        records = [
            QuestionRecord(
                qid=r["qid"],
                em=int(r["em"]),
                precision=float(r["precision"]),
                recall=float(r["recall"]),
                f1=float(r["f1"]),
                confidence=float(r.get("confidence", 0.0)),
                prediction=r.get("prediction", ""),
                best_gold_matched=r.get("best_gold_matched", ""),
                flagged=bool(r.get("flagged", False)),
            )
            for r in obj.get("per_question", [])
        ]
        metrics = obj.get("metrics", {})
        return cls(
            model_name=obj.get("model", ""),
            records=records,
            retriever_recall=float(metrics.get("RetrieverRecall", 0.0)),
            config_snapshot=obj.get("config", {}),
            split_id=obj.get("split_id", ""),
            # A report without per-question records carries only published
            # aggregates; preserve them verbatim.
            static_metrics=dict(metrics) if not records else None,
        )

    @classmethod
    def from_static_metrics(
        cls, model_name: str, precision: float, f1: float, recall: float, em: float,
        split_id: str = "static",
    ) -> "MetricReport":
        """Wrap published metric values (e.g. an experiments-table row) so
        compare_runs can operate on them without per-question records."""
        return cls(
            model_name=model_name,
            records=[],
            retriever_recall=0.0,
            config_snapshot={},
            split_id=split_id,
            static_metrics={
                "Precision": precision, "F1": f1, "Recall": recall, "EM": em,
            },
        )


def render_table(reports: Sequence[MetricReport]) -> str:
    """Plain-text table with the experiments-table column layout."""
    headers = ["Models", "Precision", "F1", "Recall", "EM"]
    rows = []
    for r in reports:
        m = r.metrics()
        rows.append(
            [r.model_name] + [f"{m[h]:.3f}" for h in headers[1:]]
        )
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    def fmt(row):
        return "  ".join(cell.ljust(w) for cell, w in zip(row, widths))
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


def evaluate_dataset(
    dataset: QADataset,
    index: SparseIndex,
    paragraphs_by_id: dict[str, TopicParagraph],
    reader: Reader,
    retriever_k: int = 35,
    reader_k: int = 10,
    model_name: str = "baseline",
    config: PreprocessConfig | None = None,
    split_id: str = "",
) -> MetricReport:
    """Score each question's top-1 prediction against its n-way golds and
    aggregate; also computes retriever recall at the configured k."""
    records: list[QuestionRecord] = []
    for para, qa in dataset.iter_qas():
        golds = [a.text for a in qa.answers]
        if not golds:
            continue
        predictions = ask(
            index, paragraphs_by_id, reader, qa.question,
            retriever_k=retriever_k, reader_k=reader_k, config=config,
        )
        if not predictions:
            records.append(
                QuestionRecord(
                    qid=qa.qid, em=0, precision=0.0, recall=0.0, f1=0.0,
                    confidence=0.0, prediction="", best_gold_matched="",
                    flagged=True,
                )
            )
            continue
        top = predictions[0]
        em = exact_match(top.text, golds)
        precision, recall, f1 = token_f1(top.text, golds)
        best_gold = max(golds, key=lambda g: token_f1(top.text, [g])[2])
        records.append(
            QuestionRecord(
                qid=qa.qid, em=em, precision=precision, recall=recall, f1=f1,
                confidence=top.score, prediction=top.text,
                best_gold_matched=best_gold,
            )
        )
    recall_report = retriever_recall(index, dataset, retriever_k, config)
    return MetricReport(
        model_name=model_name,
        records=records,
        retriever_recall=recall_report.recall,
        config_snapshot={
            "retriever_k": retriever_k,
            "reader_k": reader_k,
            "reader": model_name,
            "preprocess_config_hash": (config or PreprocessConfig()).config_hash(),
        },
        split_id=split_id,
    )


def compare_runs(a: MetricReport, b: MetricReport) -> dict[str, str | float]:
    """Per-metric percent change 100*(B-A)/A; 'undefined' when A is 0."""
    if a.split_id != b.split_id:
        raise ValueError(
            f"reports evaluate different splits: {a.split_id!r} vs {b.split_id!r}"
        )
    out: dict[str, str | float] = {}
    ma, mb = a.metrics(), b.metrics()
    for name in ma:
        if name not in mb:
            continue
        if ma[name] == 0:
            out[name] = "undefined"
        else:
            out[name] = 100.0 * (mb[name] - ma[name]) / ma[name]
    return out
