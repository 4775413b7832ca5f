"""Forum-dump parsing and document cleaning.

Ingestion reads saved exports only (JSONL, CSV, or saved HTML thread pages);
it never crawls. Authors are pseudonymized with a keyed hash and every
username seen in the dump is scrubbed from post bodies, so serialized posts
never contain an original username.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import BinaryIO, Iterable, Iterator

from .sentences import sentence_spans, words

DEFAULT_REPEAT_THRESHOLD = 3
_DEFAULT_HASH_KEY = b"forumqa-pseudonym-v1"


class IngestError(Exception):
    """Base class for ingestion failures."""


class FormatError(IngestError):
    """Input stream is not decodable as the claimed format."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (at byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class EmptyCorpusError(IngestError):
    """The dump yielded zero parseable posts."""


@dataclass
class RawPost:
    """One forum post; the corpus atom."""

    post_id: str
    posted_at: dt.date
    author_ref: str
    body: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "post_id": self.post_id,
                "posted_at": self.posted_at.isoformat(),
                "author_ref": self.author_ref,
                "body": self.body,
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "RawPost":
        obj = json.loads(line)
        return cls(
            post_id=str(obj["post_id"]),
            posted_at=dt.date.fromisoformat(obj["posted_at"]),
            author_ref=str(obj["author_ref"]),
            body=str(obj["body"]),
        )


@dataclass
class CleanDocument:
    doc_id: str
    text: str
    source_post_ids: list[str] = field(default_factory=list)


@dataclass
class ParseReport:
    posts_parsed: int = 0
    records_skipped: int = 0
    skip_reasons: list[str] = field(default_factory=list)

    def skip(self, reason: str) -> None:
        self.records_skipped += 1
        if len(self.skip_reasons) < 50:
            self.skip_reasons.append(reason)


def pseudonymize(username: str, key: bytes = _DEFAULT_HASH_KEY) -> str:
    """One-way keyed hash of a username; never invertible from output."""
    digest = hashlib.blake2b(username.encode("utf-8"), key=key, digest_size=6)
    return "u_" + digest.hexdigest()


def _parse_date(value: str) -> dt.date:
    value = value.strip()
    # Day precision; accept full ISO timestamps by truncating.
    return dt.date.fromisoformat(value[:10])


# ---------------------------------------------------------------------------
# Format readers. Each yields (post_id, date, username_or_ref, body, is_ref).


def _read_jsonl(data: bytes, report: ParseReport):
    text = data.decode("utf-8")
    offset = 0
    for raw_line in text.splitlines(keepends=True):
        line = raw_line.strip()
        line_offset = offset
        offset += len(raw_line.encode("utf-8"))
        if not line:
            continue
        try:
            obj = json.loads(line)
            post_id = str(obj["post_id"])
            date = _parse_date(str(obj["posted_at"]))
            body = str(obj["body"])
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            report.skip(f"jsonl record at byte {line_offset}: {exc}")
            continue
        if "author_ref" in obj:
            yield post_id, date, str(obj["author_ref"]), body, True
        elif "author" in obj:
            yield post_id, date, str(obj["author"]), body, False
        else:
            report.skip(f"jsonl record at byte {line_offset}: no author field")


def _read_csv(data: bytes, report: ParseReport):
    text = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise FormatError("csv input has no header row")
    fields = set(reader.fieldnames)
    if "post_id" not in fields or "body" not in fields:
        raise FormatError(
            f"csv header must contain post_id and body, got {sorted(fields)}"
        )
    for i, row in enumerate(reader, start=2):
        try:
            post_id = (row["post_id"] or "").strip()
            body = row["body"] or ""
            date = _parse_date(row.get("posted_at") or "")
            if not post_id or not body.strip():
                raise ValueError("missing post_id or body")
        except (KeyError, ValueError, TypeError) as exc:
            report.skip(f"csv row {i}: {exc}")
            continue
        if row.get("author_ref"):
            yield post_id, date, row["author_ref"].strip(), body, True
        elif row.get("author"):
            yield post_id, date, row["author"].strip(), body, False
        else:
            report.skip(f"csv row {i}: no author field")


class _ThreadPageParser(HTMLParser):
    """Extract post blocks from a saved forum thread page.

    Recognizes XenForo-style markup: a post is an element whose class
    contains 'message' or 'post'; the author comes from a data-author
    attribute or a nested .author/.username element; the date from a
    <time datetime=...>; the body from a nested element whose class
    contains 'message-body', 'post-body', 'content', or 'bbWrapper'.
    """

    _POST_CLASSES = ("message", "post")
    _BODY_CLASSES = ("message-body", "post-body", "bbwrapper", "content")
    _AUTHOR_CLASSES = ("author", "username")

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.posts: list[dict] = []
        self._post_depth = 0
        self._current: dict | None = None
        self._body_depth = 0
        self._author_depth = 0
        self._body_parts: list[str] = []
        self._author_parts: list[str] = []

    @staticmethod
    def _classes(attrs: dict[str, str | None]) -> list[str]:
        return (attrs.get("class") or "").lower().split()

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        classes = self._classes(attrs)
        if self._current is None:
            if tag in ("article", "div", "li") and any(
                any(c.startswith(p) for p in self._POST_CLASSES) for c in classes
            ):
                self._current = {
                    "post_id": attrs.get("id") or attrs.get("data-post-id") or "",
                    "author": attrs.get("data-author") or "",
                    "date": "",
                    "body": "",
                }
                self._post_depth = 1
                self._body_parts = []
            return
        self._post_depth += 1
        if self._body_depth:
            self._body_depth += 1
            if tag in ("br", "p", "div"):
                self._body_parts.append("\n")
            return
        if self._author_depth:
            self._author_depth += 1
            return
        if any(any(c.startswith(p) for p in self._BODY_CLASSES) for c in classes):
            self._body_depth = 1
        elif any(c in self._AUTHOR_CLASSES for c in classes):
            self._author_depth = 1
            self._author_parts = []
        elif tag == "time" and "datetime" in attrs and not self._current["date"]:
            self._current["date"] = attrs["datetime"] or ""

    def handle_startendtag(self, tag, attrs):
        if self._body_depth and tag == "br":
            self._body_parts.append("\n")

    def handle_endtag(self, tag):
        if self._current is None:
            return
        if self._body_depth:
            self._body_depth -= 1
            if self._body_depth == 0:
                self._current["body"] = "".join(self._body_parts)
        elif self._author_depth:
            self._author_depth -= 1
            if self._author_depth == 0 and not self._current["author"]:
                self._current["author"] = "".join(self._author_parts).strip()
        self._post_depth -= 1
        if self._post_depth == 0:
            self.posts.append(self._current)
            self._current = None

    def handle_data(self, data):
        if self._body_depth:
            self._body_parts.append(data)
        elif self._author_depth:
            self._author_parts.append(data)


def _read_html(data: bytes, report: ParseReport):
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("html input is not valid UTF-8", exc.start) from exc
    parser = _ThreadPageParser()
    parser.feed(text)
    parser.close()
    for i, block in enumerate(parser.posts, start=1):
        body = block["body"].strip()
        if not body:
            report.skip(f"html post block {i}: empty body")
            continue
        if not block["author"]:
            report.skip(f"html post block {i}: no author")
            continue
        try:
            date = _parse_date(block["date"]) if block["date"] else dt.date(1970, 1, 1)
        except ValueError:
            date = dt.date(1970, 1, 1)
        post_id = block["post_id"] or f"html-{i}"
        yield post_id, date, block["author"], body, False


_READERS = {"jsonl": _read_jsonl, "csv": _read_csv, "saved_html_thread": _read_html}
_FORMAT_ALIASES = {"html": "saved_html_thread"}


def parse_post_dump(
    stream: BinaryIO | bytes,
    format_hint: str,
    hash_key: bytes = _DEFAULT_HASH_KEY,
    report: ParseReport | None = None,
) -> Iterator[RawPost]:
    """Parse a saved forum export into RawPosts, in file order.

    Malformed records are counted on the report and skipped. The whole dump
    is buffered so that every username seen anywhere can be scrubbed from
    every body before anything is yielded.

    Raises FormatError for an undecodable stream and EmptyCorpusError when
    nothing parses.
    """
    fmt = _FORMAT_ALIASES.get(format_hint, format_hint)
    if fmt not in _READERS:
        raise ValueError(f"unknown format hint {format_hint!r}")
    data = stream if isinstance(stream, bytes) else stream.read()
    if report is None:
        report = ParseReport()
    if fmt != "saved_html_thread":
        try:
            data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{fmt} input is not valid UTF-8", exc.start) from exc

    records = []
    seen_ids: set[str] = set()
    for record in _READERS[fmt](data, report):
        if record[0] in seen_ids:
            report.skip(f"duplicate post_id {record[0]!r}")
            continue
        seen_ids.add(record[0])
        records.append(record)
    if not records:
        raise EmptyCorpusError(
            f"no posts parsed from {format_hint} input "
            f"({report.records_skipped} records skipped)"
        )

    usernames = {name for _, _, name, _, is_ref in records if not is_ref}
    ref_by_name = {name: pseudonymize(name, hash_key) for name in usernames}
    # Longest first so 'alice_b' is replaced before 'alice'.
    scrub = sorted(usernames, key=len, reverse=True)

    for post_id, date, name, body, is_ref in records:
        for username in scrub:
            if username in body:
                body = body.replace(username, ref_by_name[username])
        author_ref = name if is_ref else ref_by_name[name]
        report.posts_parsed += 1
        yield RawPost(post_id=post_id, posted_at=date, author_ref=author_ref, body=body)


# ---------------------------------------------------------------------------
# Cleaning


_DIGIT_RUN = re.compile(r"\d+")


def _mask_digits(line: str) -> str:
    return _DIGIT_RUN.sub("#", line.strip())


def clean_document(text: str, repeat_threshold: int | None = DEFAULT_REPEAT_THRESHOLD) -> str:
    """Apply the document-cleaning rules; total, idempotent, may return "".

    Rules: trim every line; drop repeated header/footer lines (same trimmed,
    digit-masked form occurring >= repeat_threshold times; None disables);
    collapse runs of 3+ newlines to 2; strip leading/trailing blank lines.
    End-of-text is a sentence boundary by construction (see sentences module),
    so no content is truncated.
    """
    lines = [line.strip() for line in text.splitlines()]

    if repeat_threshold is not None and repeat_threshold >= 1:
        counts: dict[str, int] = {}
        for line in lines:
            masked = _mask_digits(line)
            if masked:
                counts[masked] = counts.get(masked, 0) + 1
        lines = [
            line
            for line in lines
            if not _mask_digits(line) or counts[_mask_digits(line)] < repeat_threshold
        ]

    out = "\n".join(lines)
    out = re.sub(r"\n{3,}", "\n\n", out)
    out = out.strip("\n")
    if text.endswith("\n") and out:
        out += "\n"
    return out


# ---------------------------------------------------------------------------
# Splitting


@dataclass
class SplitPiece:
    """One split piece: word index range plus the words shared with the
    previous piece (overlap_words is a prefix of this piece)."""

    start_word: int
    end_word: int
    overlap_words: int


def plan_split(
    sentence_word_counts: list[int], max_words: int, overlap_words: int
) -> list[SplitPiece]:
    """Plan how to split a sentence sequence into <= max_words pieces.

    Adjacent pieces share a suffix of sentences covering at least
    overlap_words words (extended to the sentence boundary), never the whole
    previous piece. Sentences longer than max_words must be pre-chunked by
    the caller.
    """
    if max_words <= 0:
        raise ValueError(f"max_words must be positive, got {max_words}")
    if not 0 <= overlap_words < max_words:
        raise ValueError(
            f"overlap_words must be in [0, max_words), got {overlap_words}"
        )

    n = len(sentence_word_counts)
    if any(c > max_words for c in sentence_word_counts):
        raise ValueError("sentence longer than max_words; pre-chunk it first")
    prefix = [0]
    for c in sentence_word_counts:
        prefix.append(prefix[-1] + c)

    pieces: list[SplitPiece] = []
    start = 0  # first sentence of the current piece
    overlap_count = 0  # leading sentences shared with the previous piece
    while start < n:
        # Always take at least one sentence beyond the overlap; shed overlap
        # sentences from the front if that first new sentence does not fit.
        end = start + overlap_count + 1
        while prefix[end] - prefix[start] > max_words and overlap_count > 0:
            start += 1
            overlap_count -= 1
        while end < n and prefix[end + 1] - prefix[start] <= max_words:
            end += 1
        pieces.append(
            SplitPiece(
                start_word=prefix[start],
                end_word=prefix[end],
                overlap_words=prefix[start + overlap_count] - prefix[start],
            )
        )
        if end >= n:
            break
        # Overlap for the next piece: the smallest sentence suffix covering
        # overlap_words words (rounded up to the sentence boundary), but
        # always strictly smaller than the whole piece.
        k = 0
        if overlap_words > 0:
            piece_sentences = end - start
            while k < piece_sentences - 1 and prefix[end] - prefix[end - k] < overlap_words:
                k += 1
        overlap_count = k
        start = end - k
    return pieces


def _chunk_long_sentences(
    sentences: list[list[str]], max_words: int
) -> list[list[str]]:
    """Hard-split any sentence longer than max_words into word chunks."""
    out: list[list[str]] = []
    for sent in sentences:
        if len(sent) <= max_words:
            out.append(sent)
        else:
            for i in range(0, len(sent), max_words):
                out.append(sent[i : i + max_words])
    return out


def split_with_overlap(
    doc: CleanDocument, max_words: int, overlap_words: int
) -> list[CleanDocument]:
    """Split a document into sentence-aligned pieces of <= max_words words.

    Adjacent pieces share the trailing/leading overlap region extended to a
    sentence boundary; dropping each piece's leading overlap and
    concatenating reproduces the original word sequence.
    """
    spans = sentence_spans(doc.text)
    sentences = [words(doc.text[s:e]) for s, e in spans]
    sentences = _chunk_long_sentences(sentences, max_words)
    counts = [len(s) for s in sentences]
    pieces = plan_split(counts, max_words, overlap_words)
    if not pieces:
        return []
    if len(pieces) == 1:
        return [doc]

    flat = [w for sent in sentences for w in sent]
    out = []
    for i, piece in enumerate(pieces):
        text = " ".join(flat[piece.start_word : piece.end_word])
        out.append(
            CleanDocument(
                doc_id=f"{doc.doc_id}-{i}",
                text=text,
                source_post_ids=list(doc.source_post_ids),
            )
        )
    return out
