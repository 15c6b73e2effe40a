"""Standoff data model, tokenization and JSONL serialization.

Every pipeline stage exchanges :class:`AnnotatedText` values: a text plus
character-offset spans. Offsets count unicode code points (Python ``str``
indices), never bytes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import EmptyCover, OffsetError, ParseError, SpanOutOfBounds

DEFAULT_LABELS = ("Drug", "Route", "Strength", "Frequency", "Duration", "Form", "Dosage")
EXCLUDED_BY_DEFAULT = ("Reason", "ADE")

_TOKEN_RE = re.compile(r"\S+")
_MARKUP_RE = re.compile(r"\{(\w+):([^{}]*)\}")


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int
    label: str

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def shifted(self, delta: int) -> "Span":
        return Span(self.start + delta, self.end + delta, self.label)


@dataclass(frozen=True)
class TokenSpan:
    token_index: int
    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class AnnotatedText:
    """A document or sentence with sorted, non-overlapping standoff spans.

    The constructor is strict: it raises :class:`OffsetError` on any
    invariant violation. Use :func:`make_document` to trim and sort raw
    spans first.
    """

    text: str
    spans: Tuple[Span, ...] = ()
    doc_id: str = ""
    sent_id: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.spans, tuple):
            object.__setattr__(self, "spans", tuple(self.spans))
        check_spans(self.text, self.spans)

    def surface(self, span: Span) -> str:
        return self.text[span.start:span.end]

    def with_spans(self, spans: Iterable[Span]) -> "AnnotatedText":
        return AnnotatedText(self.text, tuple(spans), self.doc_id, self.sent_id)

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sent_id": self.sent_id,
            "text": self.text,
            "spans": [{"start": s.start, "end": s.end, "label": s.label} for s in self.spans],
        }


def check_spans(text: str, spans: Sequence[Span]) -> None:
    n = len(text)
    prev = None
    for span in spans:
        if span.start < 0 or span.end > n:
            raise SpanOutOfBounds(f"span {span} outside text of length {n}")
        if span.start >= span.end:
            raise OffsetError(f"empty or inverted span {span}")
        surface = text[span.start:span.end]
        if surface != surface.strip():
            raise OffsetError(f"span {span} has leading/trailing whitespace: {surface!r}")
        if prev is not None:
            if span.start < prev.start:
                raise OffsetError(f"spans not sorted: {prev} before {span}")
            if span.overlaps(prev):
                raise OffsetError(f"overlapping spans {prev} and {span}")
        prev = span


def trim_span(text: str, span: Span) -> Span:
    """Shrink ``span`` so it has no leading or trailing whitespace."""
    if span.start < 0 or span.end > len(text):
        raise SpanOutOfBounds(f"span {span} outside text of length {len(text)}")
    start, end = span.start, span.end
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if start == end:
        raise OffsetError(f"span {span} covers only whitespace")
    return Span(start, end, span.label)


def make_document(text, spans=(), doc_id="", sent_id=None) -> AnnotatedText:
    """Build an :class:`AnnotatedText`, trimming and sorting ``spans``."""
    cleaned = sorted(trim_span(text, s) for s in spans)
    return AnnotatedText(text, tuple(cleaned), doc_id, sent_id)


def from_markup(marked: str, doc_id="", sent_id=None) -> AnnotatedText:
    """Parse inline ``{Label:surface}`` markup into a document.

    >>> from_markup("{Drug:Aspirin} 100 mg").spans
    (Span(start=0, end=7, label='Drug'),)
    """
    parts, spans, cursor = [], [], 0
    pos = 0
    for m in _MARKUP_RE.finditer(marked):
        literal = marked[cursor:m.start()]
        parts.append(literal)
        pos += len(literal)
        surface = m.group(2)
        spans.append(Span(pos, pos + len(surface), m.group(1)))
        parts.append(surface)
        pos += len(surface)
        cursor = m.end()
    parts.append(marked[cursor:])
    return AnnotatedText("".join(parts), tuple(spans), doc_id, sent_id)


def tokenize(text: str) -> List[TokenSpan]:
    """Whitespace tokenization; punctuation stays attached to its word."""
    return [
        TokenSpan(i, m.start(), m.end(), m.group())
        for i, m in enumerate(_TOKEN_RE.finditer(text))
    ]


def char_span_to_token_indices(doc, span, tokens=None) -> List[int]:
    text = doc.text if isinstance(doc, AnnotatedText) else doc
    if span.start < 0 or span.end > len(text) or span.start >= span.end:
        raise SpanOutOfBounds(f"span {span} invalid for text of length {len(text)}")
    if tokens is None:
        tokens = tokenize(text)
    covered = [t.token_index for t in tokens if t.start < span.end and span.start < t.end]
    if not covered:
        raise EmptyCover(f"span {span} covers no token")
    return covered


# -- JSONL -------------------------------------------------------------------


def doc_from_json(obj, line=None) -> AnnotatedText:
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", line)
    if "text" not in obj or not isinstance(obj["text"], str):
        raise ParseError("missing or non-string 'text' field", line)
    text = obj["text"]
    raw_spans = obj.get("spans", [])
    if not isinstance(raw_spans, list):
        raise ParseError("'spans' must be a list", line)
    spans = []
    for raw in raw_spans:
        try:
            spans.append(Span(int(raw["start"]), int(raw["end"]), str(raw["label"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed span {raw!r}", line) from exc
    sent_id = obj.get("sent_id")
    if sent_id is not None and not isinstance(sent_id, int):
        raise ParseError("'sent_id' must be an integer or null", line)
    try:
        return make_document(text, spans, str(obj.get("doc_id", "")), sent_id)
    except OffsetError as exc:
        where = f"line {line}: " if line is not None else ""
        raise type(exc)(f"{where}{exc}") from exc


def dumps(doc: AnnotatedText) -> str:
    return json.dumps(doc.to_json(), ensure_ascii=False)


def iter_jsonl(path) -> Iterator[AnnotatedText]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            yield doc_from_json(obj, lineno)


def read_jsonl(path) -> List[AnnotatedText]:
    return list(iter_jsonl(path))


def write_jsonl(path, docs: Iterable[AnnotatedText]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(dumps(doc))
            fh.write("\n")
            n += 1
    return n


def write_lines(path, lines: Iterable[str]) -> None:
    Path(path).write_text("".join(f"{line}\n" for line in lines), encoding="utf-8", newline="\n")
