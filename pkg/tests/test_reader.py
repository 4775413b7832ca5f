import inspect
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from forumqa.reader import (
    AnswerPrediction,
    BaselineReader,
    ReaderProtocolError,
    ReaderTimeout,
    RemoteReader,
    ask,
    format_answers,
)
from forumqa.retriever import build_index
from forumqa.segment import TopicParagraph


class TestBaselineReader:
    def test_paper_question_finds_sentence(self, four_paragraphs, pconfig):
        reader = BaselineReader(config=pconfig)
        preds = reader.answer(
            "What is a schizophrenic afraid of?", four_paragraphs, top_k=5
        )
        assert preds
        assert any("afraid to leave the house" in p.text for p in preds)

    def test_zero_overlap_empty_result(self, four_paragraphs, pconfig):
        reader = BaselineReader(config=pconfig)
        assert reader.answer("quantum chromodynamics?", four_paragraphs, 3) == []

    def test_identical_sentences_tie_break(self, pconfig):
        paras = [
            TopicParagraph("topic-0-b", 0, "The fog is thick today.", [], 5),
            TopicParagraph("topic-0-a", 0, "The fog is thick today.", [], 5),
        ]
        reader = BaselineReader(config=pconfig)
        preds = reader.answer("How thick is the fog?", paras, top_k=2)
        assert len(preds) == 2
        assert preds[0].score == preds[1].score
        assert [p.paragraph_id for p in preds] == ["topic-0-a", "topic-0-b"]

    def test_scores_in_unit_interval_non_increasing(self, four_paragraphs, pconfig):
        reader = BaselineReader(config=pconfig)
        preds = reader.answer(
            "Does family help with food and coffee?", four_paragraphs, top_k=10
        )
        scores = [p.score for p in preds]
        assert all(0.0 <= s <= 1.0 for s in scores)
        assert scores == sorted(scores, reverse=True)

    def test_spans_slice_context_exactly(self, four_paragraphs, pconfig):
        reader = BaselineReader(config=pconfig)
        by_id = {p.paragraph_id: p for p in four_paragraphs}
        for pred in reader.answer("family food weight?", four_paragraphs, 10):
            ctx = by_id[pred.paragraph_id].context
            assert ctx[pred.char_start : pred.char_end] == pred.text

    def test_non_overlapping_spans(self, pconfig):
        para = TopicParagraph(
            "topic-0-0", 0,
            "Fog here. Fog there. Fog everywhere. No fog sometimes.", [], 9,
        )
        reader = BaselineReader(window_sentences=2, config=pconfig)
        preds = reader.answer("Where is fog?", [para], top_k=10)
        spans = sorted((p.char_start, p.char_end) for p in preds)
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            assert e1 <= s2

    def test_top_k_limit(self, four_paragraphs, pconfig):
        reader = BaselineReader(config=pconfig)
        preds = reader.answer("family food weight struggles?", four_paragraphs, top_k=1)
        assert len(preds) == 1

    def test_top_k_validation(self, four_paragraphs, pconfig):
        reader = BaselineReader(config=pconfig)
        with pytest.raises(ValueError):
            reader.answer("q", four_paragraphs, top_k=0)


class _StubHandler(BaseHTTPRequestHandler):
    """Configurable /answer stub; class attrs set per test."""

    response: dict = {}
    status: int = 200
    raw_body: bytes | None = None

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        self.request_payload = json.loads(self.rfile.read(length))
        type(self).last_request = self.request_payload
        body = self.raw_body if self.raw_body is not None else json.dumps(self.response).encode()
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", _StubHandler
    server.shutdown()
    _StubHandler.response = {}
    _StubHandler.status = 200
    _StubHandler.raw_body = None


CONTEXT_PARA = TopicParagraph(
    "topic-0-0", 0, "He is afraid to leave the house.", [], 8
)


class TestRemoteReader:
    def test_valid_span_parsed(self, stub_server):
        url, handler = stub_server
        text = "afraid to leave"
        start = CONTEXT_PARA.context.index(text)
        handler.response = {
            "answers": [
                {
                    "context_id": "topic-0-0",
                    "text": text,
                    "start": start,
                    "end": start + len(text),
                    "score": 0.9,
                }
            ]
        }
        reader = RemoteReader(endpoint=url)
        preds = reader.answer("What is he afraid of?", [CONTEXT_PARA], top_k=3)
        assert len(preds) == 1
        assert preds[0].text == text
        assert preds[0].score == 0.9

    def test_mismatched_offsets_dropped_with_warning(self, stub_server, caplog):
        url, handler = stub_server
        handler.response = {
            "answers": [
                {"context_id": "topic-0-0", "text": "wrong text", "start": 0,
                 "end": 5, "score": 0.5}
            ]
        }
        reader = RemoteReader(endpoint=url)
        with caplog.at_level("WARNING"):
            preds = reader.answer("q?", [CONTEXT_PARA], top_k=3)
        assert preds == []
        assert any("dropped" in r.message or "drop" in r.message for r in caplog.records)

    def test_top_k_cap_and_request_shape(self, stub_server):
        url, handler = stub_server
        answers = []
        for i in range(15):
            answers.append(
                {"context_id": "topic-0-0", "text": "He", "start": 0, "end": 2,
                 "score": 1.0 - i / 20}
            )
        handler.response = {"answers": answers}
        reader = RemoteReader(endpoint=url)
        preds = reader.answer("q?", [CONTEXT_PARA], top_k=10)
        assert len(preds) <= 10
        assert handler.last_request["top_k"] == 10
        assert handler.last_request["contexts"] == [
            {"id": "topic-0-0", "text": CONTEXT_PARA.context}
        ]

    def test_scores_clamped(self, stub_server):
        url, handler = stub_server
        handler.response = {
            "answers": [
                {"context_id": "topic-0-0", "text": "He", "start": 0, "end": 2,
                 "score": 3.7}
            ]
        }
        preds = RemoteReader(endpoint=url).answer("q?", [CONTEXT_PARA], top_k=1)
        assert preds[0].score == 1.0

    def test_non_200_is_protocol_error(self, stub_server):
        url, handler = stub_server
        handler.status = 500
        with pytest.raises(ReaderProtocolError):
            RemoteReader(endpoint=url).answer("q?", [CONTEXT_PARA], top_k=1)

    def test_malformed_body_is_protocol_error_with_excerpt(self, stub_server):
        url, handler = stub_server
        handler.raw_body = b'{"nonsense": true}'
        with pytest.raises(ReaderProtocolError) as exc:
            RemoteReader(endpoint=url).answer("q?", [CONTEXT_PARA], top_k=1)
        assert "nonsense" in str(exc.value)

    def test_timeout_is_retriable_error(self):
        # Unroutable address forces a connect timeout.
        reader = RemoteReader(endpoint="http://10.255.255.1:9", timeout=0.2)
        with pytest.raises((ReaderTimeout, Exception)):
            reader.answer("q?", [CONTEXT_PARA], top_k=1)


class TestAsk:
    def test_signature_defaults(self):
        sig = inspect.signature(ask)
        assert sig.parameters["retriever_k"].default == 35
        assert sig.parameters["reader_k"].default == 10

    def test_rank_one_gold_found_with_k1(self, four_paragraphs, pconfig):
        index = build_index(four_paragraphs, pconfig)
        by_id = {p.paragraph_id: p for p in four_paragraphs}
        reader = BaselineReader(config=pconfig)
        preds = ask(index, by_id, reader, "What is a schizophrenic afraid of?",
                    retriever_k=1, reader_k=5, config=pconfig)
        assert preds
        assert preds[0].paragraph_id == "topic-0-0"
        assert preds[0].retrieval_score is not None

    def test_no_match_empty(self, four_paragraphs, pconfig):
        index = build_index(four_paragraphs, pconfig)
        by_id = {p.paragraph_id: p for p in four_paragraphs}
        reader = BaselineReader(config=pconfig)
        assert ask(index, by_id, reader, "the of and", config=pconfig) == []

    def test_pipeline_monotonicity(self, four_paragraphs, pconfig):
        # top-1 answer at retriever_k=N stays the top-1 whenever its
        # paragraph is in the retrieved set.
        index = build_index(four_paragraphs, pconfig)
        by_id = {p.paragraph_id: p for p in four_paragraphs}
        reader = BaselineReader(config=pconfig)
        question = "Does the family help with weight struggles?"
        full = ask(index, by_id, reader, question,
                   retriever_k=len(four_paragraphs), reader_k=3, config=pconfig)
        assert full
        best = full[0]
        for k in range(1, len(four_paragraphs) + 1):
            from forumqa.retriever import retrieve
            retrieved = retrieve(index, question, k, pconfig).ids()
            if best.paragraph_id in retrieved:
                preds = ask(index, by_id, reader, question,
                            retriever_k=k, reader_k=3, config=pconfig)
                assert preds[0].text == best.text

    def test_format_answers_slash_separated(self):
        preds = [
            AnswerPrediction("sanity", 0.9, "a", 0, 6),
            AnswerPrediction("outside", 0.8, "b", 0, 7),
            AnswerPrediction("hallucinations", 0.7, "c", 0, 14),
        ]
        assert format_answers(preds) == "sanity/outside/hallucinations"
