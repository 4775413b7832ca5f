import json
import random

import pytest

from conftest import make_dataset
from forumqa.dataset import (
    Article,
    DatasetParagraph,
    DatasetError,
    QAAnswer,
    QADataset,
    QAItem,
    QuestionTemplate,
    add_answer,
    dataset_stats,
    load_default_templates,
    propose_questions,
    split_train_eval,
    validate,
)
from forumqa.lda import TopicAspects
from forumqa.segment import TopicParagraph


def one_question_dataset(context="He is afraid to leave the house. More text."):
    para = DatasetParagraph(
        paragraph_id="topic-0-0", topic_id=0, context=context,
        qas=[QAItem(qid="q1", question="What is he afraid of?", aspect="afraid")],
    )
    return QADataset(articles=[Article(title="topic-0", paragraphs=[para])])


class TestProposeQuestions:
    PARA = TopicParagraph("topic-3-0", 3, "Some context.", ["p1"], 2)

    def test_afraid_template(self):
        aspects = TopicAspects(topic_id=3, aspects=["afraid of"])
        drafts = propose_questions(self.PARA, aspects)
        assert drafts[0].question == "What is a schizophrenic afraid of?"
        assert not drafts[0].needs_review

    def test_drinking_template(self):
        aspects = TopicAspects(topic_id=3, aspects=["drinking"])
        drafts = propose_questions(self.PARA, aspects)
        assert drafts[0].question == "What does a schizophrenic stop with?"

    def test_unmatched_aspect_flagged(self):
        aspects = TopicAspects(topic_id=3, aspects=["zzgarble"])
        drafts = propose_questions(self.PARA, aspects)
        assert drafts[0].question == "What about zzgarble?"
        assert drafts[0].needs_review

    def test_empty_aspects(self):
        aspects = TopicAspects(topic_id=3, aspects=[])
        assert propose_questions(self.PARA, aspects) == []

    def test_first_matching_template_wins(self):
        templates = [
            QuestionTemplate("drink", "First {aspect}?"),
            QuestionTemplate("drink", "Second {aspect}?"),
        ]
        aspects = TopicAspects(topic_id=3, aspects=["drinking"])
        drafts = propose_questions(self.PARA, aspects, templates)
        assert drafts[0].question == "First drinking?"

    def test_qids_unique_per_paragraph(self):
        aspects = TopicAspects(topic_id=3, aspects=["a1", "a2", "a3"])
        drafts = propose_questions(self.PARA, aspects)
        qids = [d.qid for d in drafts]
        assert len(set(qids)) == 3
        assert all(q.startswith("topic-3-0-q") for q in qids)


class TestAddAnswer:
    def test_exact_substring(self):
        ds = one_question_dataset()
        context = next(ds.iter_paragraphs()).context
        start = context.index("He is afraid to leave the house")
        end = start + len("He is afraid to leave the house")
        answer = add_answer(ds, "q1", start, end)
        assert answer.text == "He is afraid to leave the house"
        assert context[answer.answer_start : answer.answer_start + len(answer.text)] == answer.text

    def test_second_answer_appends(self):
        ds = one_question_dataset()
        add_answer(ds, "q1", 0, 5)
        add_answer(ds, "q1", 6, 12)
        _, qa = ds.find_qa("q1")
        assert len(qa.answers) == 2

    def test_inverted_span(self):
        ds = one_question_dataset()
        with pytest.raises(DatasetError):
            add_answer(ds, "q1", 10, 5)

    def test_out_of_bounds(self):
        ds = one_question_dataset()
        with pytest.raises(DatasetError):
            add_answer(ds, "q1", 0, 10_000)

    def test_whitespace_only_span(self):
        ds = one_question_dataset()
        context = next(ds.iter_paragraphs()).context
        idx = context.index(" ")
        with pytest.raises(DatasetError):
            add_answer(ds, "q1", idx, idx + 1)

    def test_unknown_qid(self):
        ds = one_question_dataset()
        with pytest.raises(KeyError):
            add_answer(ds, "nope", 0, 4)


class TestValidate:
    def test_pristine_dataset_empty_report(self, four_paragraphs):
        ds = make_dataset(four_paragraphs)
        assert validate(ds) == []

    def test_offset_off_by_one_detected(self, four_paragraphs):
        ds = make_dataset(four_paragraphs)
        _, qa = next(iter(ds.iter_qas()))
        qa.answers[0].answer_start += 1
        report = validate(ds)
        assert len(report) == 1
        assert report[0].qid == qa.qid

    def test_duplicate_qids_detected(self, four_paragraphs):
        ds = make_dataset(four_paragraphs, questions_per_para=2)
        paras = list(ds.iter_paragraphs())
        paras[0].qas[1].qid = paras[0].qas[0].qid
        reasons = {v.reason for v in validate(ds)}
        assert "duplicate qid" in reasons

    def test_unanswered_question_reported(self):
        ds = one_question_dataset()
        assert any("no answers" in v.reason for v in validate(ds))

    def test_aspect_membership_checked(self, four_paragraphs):
        ds = make_dataset(four_paragraphs)
        for _, qa in ds.iter_qas():
            qa.aspect = "rogue"
        violations = validate(ds, aspects_by_topic={0: ["ok"], 1: ["ok"]})
        assert all("aspect" in v.reason for v in violations)
        assert len(violations) == 4

    def test_validation_never_throws_on_corrupt_offsets(self, four_paragraphs):
        ds = make_dataset(four_paragraphs)
        for _, qa in ds.iter_qas():
            qa.answers[0].answer_start = -99
        assert validate(ds)  # reports, does not raise


class TestFuzzOffsets:
    def test_validator_catches_injected_corruptions(self, four_paragraphs):
        rng = random.Random(0)
        caught = 0
        injected = 0
        base = make_dataset(four_paragraphs, questions_per_para=2, answers_per_question=2)
        blob = base.to_json()
        for _ in range(300):
            ds = QADataset.from_json(blob)
            qas = [(p, qa) for p, qa in ds.iter_qas()]
            para, qa = rng.choice(qas)
            ans = rng.choice(qa.answers)
            mode = rng.choice(["shift", "truncate", "mangle"])
            if mode == "shift":
                ans.answer_start += rng.choice([-3, -2, -1, 1, 2, 3])
            elif mode == "truncate":
                ans.text = ans.text[:-2]
            else:
                ans.text = "x" + ans.text[1:]
            end = ans.answer_start + len(ans.text)
            if (
                0 <= ans.answer_start <= end <= len(para.context)
                and para.context[ans.answer_start : end] == ans.text
            ):
                continue  # corruption happened to stay consistent; not a violation
            injected += 1
            if validate(ds):
                caught += 1
        assert injected > 200
        assert caught == injected


class TestSerialization:
    def test_round_trip_equality(self, four_paragraphs):
        ds = make_dataset(four_paragraphs, questions_per_para=2, answers_per_question=3)
        assert QADataset.from_json(ds.to_json()) == ds

    def test_round_trip_byte_identical(self, four_paragraphs):
        ds = make_dataset(four_paragraphs)
        blob = ds.to_json()
        assert QADataset.from_json(blob).to_json() == blob

    def test_squad_shape(self, four_paragraphs):
        obj = json.loads(make_dataset(four_paragraphs).to_json())
        assert obj["version"] == "1.1"
        art = obj["data"][0]
        qa = art["paragraphs"][0]["qas"][0]
        assert set(qa) >= {"id", "question", "answers"}
        assert set(qa["answers"][0]) == {"text", "answer_start"}

    def test_unicode_offsets_are_scalar_values(self):
        context = "Ému 😊 répond. Voilà."
        para = DatasetParagraph("topic-0-0", 0, context, [
            QAItem(qid="q1", question="Q?", aspect="")
        ])
        ds = QADataset(articles=[Article("topic-0", [para])])
        start = context.index("répond")
        add_answer(ds, "q1", start, start + len("répond"))
        blob = ds.to_json()
        again = QADataset.from_json(blob)
        _, qa = again.find_qa("q1")
        a = qa.answers[0]
        assert context[a.answer_start : a.answer_start + len(a.text)] == "répond"


class TestDatasetStats:
    def test_empty(self):
        stats = dataset_stats(QADataset())
        assert stats["question_and_answer"] == 0
        assert stats["types_of_questions"] == 0

    def test_small_fixture_counts(self, four_paragraphs):
        ds = make_dataset(four_paragraphs[:2], questions_per_para=2)
        stats = dataset_stats(ds)
        assert stats["paragraph_chunks"] == 2
        assert stats["unique_questions"] == 4
        assert stats["question_and_answer"] == 4

    def test_paper_scale_targets(self, four_paragraphs):
        # 35 types / 1050 QA is the published shape; synthesize that scale.
        paras = [
            TopicParagraph(f"topic-{k}-0", k, f"Context {k} body text.", [], 4)
            for k in range(35)
        ]
        articles = []
        for k, para in enumerate(paras):
            qas = [
                QAItem(
                    qid=f"t{k}-q{i}", question=f"Question type {k}?", aspect="",
                    answers=[QAAnswer(text="Context", answer_start=0)],
                )
                for i in range(30)
            ]
            articles.append(Article(
                title=f"topic-{k}",
                paragraphs=[DatasetParagraph(para.paragraph_id, k, para.context, qas)],
            ))
        ds = QADataset(articles=articles)
        stats = dataset_stats(ds)
        assert stats["types_of_questions"] == 35
        assert stats["question_and_answer"] == 1050


class TestSplit:
    def _uniform_dataset(self, topics=35, per_topic=30):
        articles = []
        for k in range(topics):
            qas = [
                QAItem(
                    qid=f"t{k}-q{i}", question=f"Q {k} {i}?", aspect="",
                    answers=[QAAnswer(text="Context", answer_start=0)],
                )
                for i in range(per_topic)
            ]
            articles.append(Article(
                title=f"topic-{k}",
                paragraphs=[DatasetParagraph(f"topic-{k}-0", k, "Context body.", qas)],
            ))
        return QADataset(articles=articles)

    @staticmethod
    def _count(ds):
        return sum(1 for _ in ds.iter_qas())

    def test_1050_at_point7_gives_735_315(self):
        ds = self._uniform_dataset()
        train, eval_split, _ = split_train_eval(ds, 0.7, seed=1)
        assert self._count(train) == 735
        assert self._count(eval_split) == 315

    def test_half_split_on_two_question_topic(self):
        ds = self._uniform_dataset(topics=1, per_topic=2)
        train, eval_split, _ = split_train_eval(ds, 0.5, seed=0)
        assert self._count(train) == 1
        assert self._count(eval_split) == 1

    def test_single_question_topic_goes_to_train_with_warning(self):
        ds = self._uniform_dataset(topics=1, per_topic=1)
        train, eval_split, warnings = split_train_eval(ds, 0.7, seed=0)
        assert self._count(train) == 1
        assert self._count(eval_split) == 0
        assert warnings

    def test_deterministic_and_disjoint(self):
        ds = self._uniform_dataset(topics=5, per_topic=7)
        t1, e1, _ = split_train_eval(ds, 0.7, seed=42)
        t2, e2, _ = split_train_eval(ds, 0.7, seed=42)
        ids = lambda d: {qa.qid for _, qa in d.iter_qas()}  # noqa: E731
        assert ids(t1) == ids(t2)
        assert ids(e1) == ids(e2)
        assert not (ids(t1) & ids(e1))
        assert ids(t1) | ids(e1) == ids(ds)

    def test_stratified_by_topic(self):
        ds = self._uniform_dataset(topics=4, per_topic=10)
        train, _, _ = split_train_eval(ds, 0.7, seed=3)
        per_topic = {}
        for para, qa in train.iter_qas():
            per_topic[para.topic_id] = per_topic.get(para.topic_id, 0) + 1
        assert all(v == 7 for v in per_topic.values())

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            split_train_eval(self._uniform_dataset(1, 2), 1.0, 0)


def test_default_templates_load():
    templates = load_default_templates()
    assert any(t.matches("afraid of") for t in templates)
    assert any(t.matches("drinking") for t in templates)
