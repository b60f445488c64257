"""Corpus loading, keyword filtering, and text utilities.

Articles arrive as JSONL, one object per line, with fields id, title,
body, outlet, leaning, and date.  This module also owns sentence
segmentation and token truncation so that every downstream consumer
works with identical text units.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import date as _isodate
from functools import cached_property
from importlib import resources

from .errors import DataError

LEANINGS = ("left", "left_center", "right", "questionable")

_REQUIRED_FIELDS = ("id", "title", "body", "outlet", "leaning", "date")

# Tokens ending in '.' that do not close a sentence.  Case-sensitive;
# matched against the whole whitespace-delimited token.
ABBREVIATIONS = frozenset({
    "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "Rev.", "Gen.", "Sen.", "Rep.",
    "Gov.", "Pres.", "Lt.", "Col.", "Sgt.", "St.", "Jr.", "Sr.",
    "U.S.", "U.K.", "U.N.", "E.U.", "D.C.",
    "Inc.", "Corp.", "Co.", "Ltd.",
    "Jan.", "Feb.", "Mar.", "Apr.", "Jun.", "Jul.", "Aug.",
    "Sep.", "Sept.", "Oct.", "Nov.", "Dec.",
    "Mt.", "Ft.", "No.", "vs.", "etc.", "al.", "approx.", "est.",
})

_TERMINALS = ".!?"


@dataclass(frozen=True)
class Sentence:
    """One segmented sentence; char_span indexes into the source body."""

    index: int
    text: str
    char_span: tuple[int, int]


@dataclass(frozen=True)
class Article:
    id: str
    title: str
    body: str
    outlet: str
    leaning: str
    date: str

    def __post_init__(self):
        if self.leaning not in LEANINGS:
            raise DataError(
                f"unknown leaning {self.leaning!r}; expected one of "
                + ", ".join(LEANINGS)
            )
        try:
            _isodate.fromisoformat(self.date)
        except (TypeError, ValueError):
            raise DataError(f"date {self.date!r} is not an ISO-8601 date") from None

    @cached_property
    def sentences(self) -> tuple[Sentence, ...]:
        return tuple(split_sentences(self.body))

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "body": self.body,
            "outlet": self.outlet,
            "leaning": self.leaning,
            "date": self.date,
        }


def iter_jsonl(path):
    """Yield (line_number, record) for each JSON object in a JSONL file.

    Blank lines and a leading metadata record (an object whose only key
    is "_meta", written by the pipeline for provenance) are skipped.
    """
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: malformed JSON ({exc.msg})") from None
            if isinstance(record, dict) and set(record) == {"_meta"}:
                continue
            yield lineno, record


def load_corpus(path) -> list[Article]:
    """Read articles from a JSONL file, preserving file order.

    Unknown fields on a record are ignored.  Raises DataError, naming
    the offending line, for malformed JSON or missing fields.
    """
    articles = []
    for lineno, record in iter_jsonl(path):
        if not isinstance(record, dict):
            raise DataError(f"{path}: line {lineno}: expected a JSON object")
        missing = [name for name in _REQUIRED_FIELDS if name not in record]
        if missing:
            raise DataError(
                f"{path}: line {lineno}: missing field(s) " + ", ".join(missing)
            )
        try:
            articles.append(Article(**{name: record[name] for name in _REQUIRED_FIELDS}))
        except DataError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
    return articles


def save_corpus(articles, path, meta=None):
    """Write articles as JSONL; an optional meta dict becomes a leading
    {"_meta": ...} record that loaders skip."""
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for article in articles:
            fh.write(json.dumps(article.to_record(), sort_keys=True) + "\n")


def _parse_keywords(lines, source: str) -> list[str]:
    terms: list[str] = []
    seen = set()
    for raw in lines:
        term = raw.split("#", 1)[0].strip().lower()
        if term and term not in seen:
            seen.add(term)
            terms.append(term)
    if not terms:
        raise DataError(f"{source}: keyword list is empty")
    return terms


def load_keywords(path) -> list[str]:
    """Read a keyword list: one lowercase term per line, '#' comments.

    Terms are lowercased and deduplicated while preserving first
    occurrence order.  An effectively empty list is a DataError.
    """
    with open(path, encoding="utf-8") as fh:
        return _parse_keywords(fh, source=str(path))


def default_keywords() -> list[str]:
    """The bundled climate-topic keyword list."""
    text = resources.files("nframe").joinpath("data/keywords.txt").read_text("utf-8")
    return _parse_keywords(text.splitlines(), source="bundled keywords")


def count_mentions(text: str, keywords) -> int:
    """Total keyword mentions in text, case-insensitive, word-bounded.

    Each keyword is counted independently, so a span matched by two
    different keywords contributes twice.
    """
    total = 0
    for term in keywords:
        pattern = r"\b" + re.escape(term) + r"\b"
        total += len(re.findall(pattern, text, flags=re.IGNORECASE))
    return total


def climate_filter(article: Article, keywords) -> bool:
    """Keep an article iff its title mentions at least one keyword, or
    its body carries at least three keyword mentions in total."""
    if not keywords:
        raise ValueError("keyword list must be non-empty")
    if count_mentions(article.title, keywords) >= 1:
        return True
    return count_mentions(article.body, keywords) >= 3


def _token_ending_at(text: str, i: int) -> str:
    start = i
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:i + 1]


def split_sentences(text: str) -> list[Sentence]:
    """Deterministic rule-based sentence segmentation.

    A sentence closes at '.', '!' or '?' followed by whitespace and an
    uppercase letter, or by end of text; a '.' closing a token on the
    abbreviation list never splits.  Trailing text without terminal
    punctuation forms a final sentence.  Spans index into the input and
    the gaps between consecutive spans are whitespace only, so the body
    is exactly recoverable from the sentences.
    """
    n = len(text)
    boundaries = []
    for i, ch in enumerate(text):
        if ch not in _TERMINALS:
            continue
        if i + 1 < n and not text[i + 1].isspace():
            continue
        j = i + 1
        while j < n and text[j].isspace():
            j += 1
        if j < n and not text[j].isupper():
            continue
        if ch == "." and _token_ending_at(text, i) in ABBREVIATIONS:
            continue
        boundaries.append(i + 1)

    spans: list[tuple[int, int]] = []
    prev = 0
    for bound in boundaries:
        start = prev
        while start < bound and text[start].isspace():
            start += 1
        if start < bound:
            spans.append((start, bound))
        prev = bound
    start = prev
    while start < n and text[start].isspace():
        start += 1
    if start < n:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        spans.append((start, end))

    return [
        Sentence(index=k, text=text[a:b], char_span=(a, b))
        for k, (a, b) in enumerate(spans)
    ]


def truncate_tokens(text: str, n: int) -> str:
    """First n whitespace-delimited tokens, rejoined with single spaces."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return " ".join(text.split()[:n])
