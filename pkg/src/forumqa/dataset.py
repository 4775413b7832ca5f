"""SQuAD-format QA dataset: aspect-derived questions over topic paragraphs
with n-way answers as character-offset spans.

Serialization is SQuAD v1.1-shaped (data -> paragraphs -> qas -> answers
with answer_start) plus paragraph_id/topic_id/aspect side fields that
standard SQuAD tooling ignores. answer_start counts Unicode scalar values
(Python string indices), not bytes.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

from .lda import TopicAspects
from .segment import TopicParagraph

DATASET_VERSION = "1.1"
DEFAULT_QUESTION_TEMPLATE = "What about {aspect}?"


class DatasetError(Exception):
    pass


@dataclass
class QAAnswer:
    text: str
    answer_start: int


@dataclass
class QAItem:
    qid: str
    question: str
    aspect: str
    answers: list[QAAnswer] = field(default_factory=list)
    needs_review: bool = False


@dataclass
class DatasetParagraph:
    paragraph_id: str
    topic_id: int
    context: str
    qas: list[QAItem] = field(default_factory=list)


@dataclass
class Article:
    title: str
    paragraphs: list[DatasetParagraph] = field(default_factory=list)


@dataclass
class QADataset:
    version: str = DATASET_VERSION
    articles: list[Article] = field(default_factory=list)

    def iter_paragraphs(self) -> Iterable[DatasetParagraph]:
        for art in self.articles:
            yield from art.paragraphs

    def iter_qas(self) -> Iterable[tuple[DatasetParagraph, QAItem]]:
        for para in self.iter_paragraphs():
            for qa in para.qas:
                yield para, qa

    def find_qa(self, qid: str) -> tuple[DatasetParagraph, QAItem]:
        for para, qa in self.iter_qas():
            if qa.qid == qid:
                return para, qa
        raise KeyError(f"no question with qid {qid!r}")

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "data": [
                {
                    "title": art.title,
                    "paragraphs": [
                        {
                            "paragraph_id": para.paragraph_id,
                            "topic_id": para.topic_id,
                            "context": para.context,
                            "qas": [
                                {
                                    "id": qa.qid,
                                    "question": qa.question,
                                    "aspect": qa.aspect,
                                    "needs_review": qa.needs_review,
                                    "answers": [
                                        {"text": a.text, "answer_start": a.answer_start}
                                        for a in qa.answers
                                    ],
                                }
                                for qa in para.qas
                            ],
                        }
                        for para in art.paragraphs
                    ],
                }
                for art in self.articles
            ],
        }

    def to_json(self) -> str:
        # Fixed key order + fixed separators so golden files are byte-stable.
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=1)

    @classmethod
    def from_dict(cls, obj: dict) -> "QADataset":
        articles = []
        for art in obj.get("data", []):
            paragraphs = []
            for para in art.get("paragraphs", []):
                qas = [
                    QAItem(
                        qid=str(qa["id"]),
                        question=qa["question"],
                        aspect=qa.get("aspect", ""),
                        needs_review=bool(qa.get("needs_review", False)),
                        answers=[
                            QAAnswer(text=a["text"], answer_start=int(a["answer_start"]))
                            for a in qa.get("answers", [])
                        ],
                    )
                    for qa in para.get("qas", [])
                ]
                paragraphs.append(
                    DatasetParagraph(
                        paragraph_id=str(para.get("paragraph_id", "")),
                        topic_id=int(para.get("topic_id", -1)),
                        context=para["context"],
                        qas=qas,
                    )
                )
            articles.append(Article(title=art.get("title", ""), paragraphs=paragraphs))
        return cls(version=str(obj.get("version", DATASET_VERSION)), articles=articles)

    @classmethod
    def from_json(cls, text: str) -> "QADataset":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Question templates


@dataclass(frozen=True)
class QuestionTemplate:
    aspect_pattern: str  # regex, matched with re.search
    question_template: str  # may contain an {aspect} slot

    def matches(self, aspect: str) -> bool:
        return re.search(self.aspect_pattern, aspect) is not None

    def render(self, aspect: str) -> str:
        return self.question_template.format(aspect=aspect)


def load_default_templates() -> list[QuestionTemplate]:
    text = resources.files("forumqa.data").joinpath("question_templates.json").read_text("utf-8")
    return parse_templates(text)


def parse_templates(text: str) -> list[QuestionTemplate]:
    items = json.loads(text)
    return [
        QuestionTemplate(
            aspect_pattern=item["aspect_pattern"],
            question_template=item["question_template"],
        )
        for item in items
    ]


def propose_questions(
    paragraph: TopicParagraph,
    aspects: TopicAspects,
    templates: list[QuestionTemplate] | None = None,
) -> list[QAItem]:
    """One draft question per aspect from the first matching template;
    unmatched aspects get the default template and are flagged for review."""
    if templates is None:
        templates = load_default_templates()
    drafts = []
    for i, aspect in enumerate(aspects.aspects):
        template = next((t for t in templates if t.matches(aspect)), None)
        if template is None:
            question = DEFAULT_QUESTION_TEMPLATE.format(aspect=aspect)
            needs_review = True
        else:
            question = template.render(aspect)
            needs_review = False
        drafts.append(
            QAItem(
                qid=f"{paragraph.paragraph_id}-q{i}",
                question=question,
                aspect=aspect,
                needs_review=needs_review,
            )
        )
    return drafts


# ---------------------------------------------------------------------------
# Mutation and validation


def add_answer(dataset: QADataset, qid: str, start: int, end: int) -> QAAnswer:
    """Append the exact context substring [start, end) as a new gold answer."""
    para, qa = dataset.find_qa(qid)
    if not 0 <= start < end <= len(para.context):
        raise DatasetError(
            f"span ({start}, {end}) out of bounds for context of length {len(para.context)}"
        )
    text = para.context[start:end]
    if not text.strip():
        raise DatasetError(f"span ({start}, {end}) covers only whitespace")
    answer = QAAnswer(text=text, answer_start=start)
    qa.answers.append(answer)
    return answer


@dataclass
class Violation:
    qid: str
    reason: str


def validate(
    dataset: QADataset,
    aspects_by_topic: dict[int, list[str]] | None = None,
) -> list[Violation]:
    """Report every invariant violation; an empty list means valid.

    Never raises: validation of a corrupt file is still a report.
    """
    violations: list[Violation] = []
    seen_qids: set[str] = set()
    question_types: set[str] = set()
    topics: set[int] = set()
    for para in dataset.iter_paragraphs():
        topics.add(para.topic_id)
        for qa in para.qas:
            if qa.qid in seen_qids:
                violations.append(Violation(qa.qid, "duplicate qid"))
            seen_qids.add(qa.qid)
            if not qa.question.strip():
                violations.append(Violation(qa.qid, "empty question"))
            question_types.add(qa.question)
            if not qa.answers:
                violations.append(Violation(qa.qid, "no answers annotated"))
            for i, ans in enumerate(qa.answers):
                start = ans.answer_start
                end = start + len(ans.text)
                if not 0 <= start <= end <= len(para.context):
                    violations.append(
                        Violation(qa.qid, f"answer {i} offsets ({start}, {end}) out of bounds")
                    )
                    continue
                if para.context[start:end] != ans.text:
                    violations.append(
                        Violation(
                            qa.qid,
                            f"answer {i} text does not match context slice at {start}",
                        )
                    )
            if aspects_by_topic is not None:
                allowed = aspects_by_topic.get(para.topic_id, [])
                if qa.aspect and qa.aspect not in allowed:
                    violations.append(
                        Violation(qa.qid, f"aspect {qa.aspect!r} not in topic {para.topic_id} aspects")
                    )
    return violations


def dataset_stats(dataset: QADataset) -> dict:
    """Counts in the statistics-row schema; reports both the QA pair count
    and the unique-question count, which differ once questions carry
    multiple answers."""
    paragraphs = list(dataset.iter_paragraphs())
    questions = [qa for _, qa in dataset.iter_qas()]
    answers = sum(len(qa.answers) for qa in questions)
    return {
        "user_posts": None,  # filled by the CLI from the corpus artifact
        "max_seq_words": max(
            (len(p.context.split()) for p in paragraphs), default=0
        ),
        "topic_paragraphs": len({p.topic_id for p in paragraphs}),
        "types_of_questions": len({qa.question for qa in questions}),
        "question_and_answer": answers,
        "unique_questions": len(questions),
        "paragraph_chunks": len(paragraphs),
    }


def split_train_eval(
    dataset: QADataset, train_fraction: float = 0.7, seed: int = 0
) -> tuple[QADataset, QADataset, list[str]]:
    """Split by whole question, stratified by topic, deterministic per seed.

    Per topic the train count is floor(n * fraction + 0.5), clamped to at
    least 1; single-question topics go to train with a warning. Returns
    (train, eval, warnings).
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = random.Random(seed)
    warnings: list[str] = []

    by_topic: dict[int, list[str]] = {}
    for para, qa in dataset.iter_qas():
        by_topic.setdefault(para.topic_id, []).append(qa.qid)

    train_qids: set[str] = set()
    for topic in sorted(by_topic):
        qids = sorted(by_topic[topic])
        rng.shuffle(qids)
        n = len(qids)
        if n == 1:
            warnings.append(f"topic {topic} has a single question; assigned to train")
            train_qids.update(qids)
            continue
        n_train = max(1, int(n * train_fraction + 0.5))
        if n_train == n:
            n_train = n - 1
        train_qids.update(qids[:n_train])

    def filtered(keep_train: bool) -> QADataset:
        articles = []
        for art in dataset.articles:
            paragraphs = []
            for para in art.paragraphs:
                qas = [
                    qa for qa in para.qas if (qa.qid in train_qids) == keep_train
                ]
                if qas:
                    paragraphs.append(
                        DatasetParagraph(
                            paragraph_id=para.paragraph_id,
                            topic_id=para.topic_id,
                            context=para.context,
                            qas=qas,
                        )
                    )
            if paragraphs:
                articles.append(Article(title=art.title, paragraphs=paragraphs))
        return QADataset(version=dataset.version, articles=articles)

    return filtered(True), filtered(False), warnings
