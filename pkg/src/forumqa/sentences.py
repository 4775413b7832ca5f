"""Deterministic sentence segmentation for forum prose.

A sentence boundary is terminal punctuation (. ! ?) followed by whitespace
and an uppercase letter or digit, a paragraph break (blank line), or the end
of the text. A small abbreviation stoplist suppresses false boundaries.
Nothing smarter on purpose: the splitter must be reproducible and cheap.
"""

from __future__ import annotations

import re

# Abbreviations that commonly precede a capitalized word mid-sentence.
ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "st", "etc", "vs", "eg", "ie",
    "e.g", "i.e", "jr", "sr", "no", "vol", "approx",
})

_TERMINAL = re.compile(r"[.!?][\"')\]]*")
_BOUNDARY = re.compile(r"[.!?][\"')\]]*\s+(?=[A-Z0-9])")
_PARAGRAPH_BREAK = re.compile(r"\n\s*\n")
_WORD = re.compile(r"\S+")


def _is_abbreviation(text: str, punct_idx: int) -> bool:
    """True if the '.' at punct_idx terminates a stoplisted abbreviation."""
    if text[punct_idx] != ".":
        return False
    j = punct_idx
    while j > 0 and (text[j - 1].isalpha() or text[j - 1] == "."):
        j -= 1
    word = text[j:punct_idx].lower().rstrip(".")
    return word in ABBREVIATIONS


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Split text into sentence (start, end) character spans.

    The spans cover every non-whitespace character in order; the final
    span always ends at the last non-whitespace character, so the end of
    the text is a boundary by construction.
    """
    if not text.strip():
        return []

    cut_points = set()
    for m in _BOUNDARY.finditer(text):
        if _is_abbreviation(text, m.start()):
            continue
        # Cut after the punctuation (and any closing quotes/brackets).
        punct_end = m.start() + len(m.group().rstrip())
        cut_points.add(punct_end)
    for m in _PARAGRAPH_BREAK.finditer(text):
        cut_points.add(m.start())

    spans: list[tuple[int, int]] = []
    start = 0
    for cut in sorted(cut_points):
        piece = text[start:cut]
        if piece.strip():
            s = start + (len(piece) - len(piece.lstrip()))
            e = start + len(piece.rstrip())
            spans.append((s, e))
        start = cut
    tail = text[start:]
    if tail.strip():
        s = start + (len(tail) - len(tail.lstrip()))
        e = start + len(tail.rstrip())
        spans.append((s, e))
    return spans


def split_sentences(text: str) -> list[str]:
    """Sentence texts, whitespace-trimmed, in document order."""
    return [text[s:e] for s, e in sentence_spans(text)]


def word_count(text: str) -> int:
    """Number of whitespace-delimited words."""
    return len(_WORD.findall(text))


def words(text: str) -> list[str]:
    """Whitespace-delimited words in order."""
    return _WORD.findall(text)


def ends_at_sentence_boundary(text: str) -> bool:
    """Whether nothing but whitespace follows the last sentence."""
    spans = sentence_spans(text)
    if not spans:
        return text.strip() == ""
    return text[spans[-1][1]:].strip() == ""
