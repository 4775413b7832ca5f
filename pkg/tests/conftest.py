import datetime as dt

import pytest

from forumqa.dataset import (
    Article,
    DatasetParagraph,
    QAAnswer,
    QADataset,
    QAItem,
)
from forumqa.ingest import RawPost
from forumqa.preprocess import PreprocessConfig
from forumqa.reader import AnswerPrediction
from forumqa.segment import TopicParagraph


class GoldReader:
    """Oracle upper-bound reader: answers any known question with a gold
    span verbatim. Only usable when answered question texts are unique."""

    def __init__(self, dataset: QADataset):
        self.by_question = {}
        for para, qa in dataset.iter_qas():
            if qa.answers:
                self.by_question.setdefault(qa.question, []).append(
                    (para, qa.answers[0])
                )

    def answer(self, question, paragraphs, top_k):
        candidates = {p.paragraph_id for p in paragraphs}
        for para, gold in self.by_question.get(question, []):
            if para.paragraph_id in candidates:
                return [
                    AnswerPrediction(
                        text=gold.text,
                        score=1.0,
                        paragraph_id=para.paragraph_id,
                        char_start=gold.answer_start,
                        char_end=gold.answer_start + len(gold.text),
                    )
                ]
        return []


@pytest.fixture
def pconfig():
    """Preprocessing config with pruning disabled (tiny fixtures)."""
    return PreprocessConfig(min_df=1, max_df_fraction=1.0)


@pytest.fixture(scope="session")
def bundled_posts():
    """The 200-post synthetic corpus shipped as package data."""
    from importlib import resources

    text = resources.files("forumqa.data").joinpath("synthetic_corpus.jsonl").read_text("utf-8")
    return [RawPost.from_json(line) for line in text.splitlines() if line.strip()]


@pytest.fixture(scope="session")
def demo_config_factory():
    """Build the demo pipeline config rooted at a given directory."""
    from importlib import resources

    from forumqa.config import PipelineConfig

    def factory(root):
        corpus = resources.files("forumqa.data").joinpath("synthetic_corpus.jsonl")
        input_path = root / "synthetic_input.jsonl"
        input_path.write_text(corpus.read_text("utf-8"), "utf-8")
        return PipelineConfig(
            workdir=str(root / "artifacts"),
            input_path=str(input_path),
            n_topics=4,
            iterations=400,
            burn_in=100,
            min_df=2,
            max_df_fraction=0.6,
            aspects_per_topic=6,
            bigram_threshold=10,
            max_words=250,
            overlap_words=30,
        )

    return factory


@pytest.fixture(scope="session")
def demo_run(tmp_path_factory, demo_config_factory):
    """One full pipeline run over the bundled corpus, shared per session."""
    from forumqa import pipeline

    root = tmp_path_factory.mktemp("demo_run")
    config = demo_config_factory(root)
    pipeline.run_all(config)
    return config


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        return
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            outcomes[name] = "PASS" if status == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, description in CRITERIA.items():
        if name in outcomes:
            terminalreporter.write_line(f"{outcomes[name]}  {description}")


@pytest.fixture
def four_paragraphs():
    return [
        TopicParagraph(
            "topic-0-0", 0,
            "He is afraid to leave the house. The voices scare him at night.",
            ["p1"], 13,
        ),
        TopicParagraph(
            "topic-0-1", 0,
            "I stopped drinking coffee and nicotine last year. It was hard.",
            ["p2"], 11,
        ),
        TopicParagraph(
            "topic-1-0", 1,
            "My family helps me with food and weight struggles every week.",
            ["p3"], 11,
        ),
        TopicParagraph(
            "topic-1-1", 1,
            "The pandemic made society harder for my family and friends.",
            ["p4"], 10,
        ),
    ]


def make_post(post_id: str, body: str, day: int = 1) -> RawPost:
    return RawPost(
        post_id=post_id,
        posted_at=dt.date(2021, 1, day),
        author_ref=f"u_{post_id}",
        body=body,
    )


def make_dataset(paragraphs, questions_per_para=1, answers_per_question=1) -> QADataset:
    """Dataset whose golds are the leading words of each context."""
    articles = {}
    for para in paragraphs:
        content_words = sorted(set(para.context.split()), key=len, reverse=True)
        qas = []
        for qi in range(questions_per_para):
            answers = []
            for ai in range(answers_per_question):
                end = min(len(para.context), 10 + 3 * ai)
                answers.append(QAAnswer(text=para.context[:end], answer_start=0))
            qas.append(
                QAItem(
                    qid=f"{para.paragraph_id}-q{qi}",
                    question=f"What about {content_words[qi % 3]}?",
                    aspect="",
                    answers=answers,
                )
            )
        articles.setdefault(para.topic_id, []).append(
            DatasetParagraph(
                paragraph_id=para.paragraph_id,
                topic_id=para.topic_id,
                context=para.context,
                qas=qas,
            )
        )
    return QADataset(
        articles=[
            Article(title=f"topic-{k}", paragraphs=paras)
            for k, paras in sorted(articles.items())
        ]
    )
