"""Rule-based sentence splitting with offset rebasing."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, List, Sequence, Tuple

from .corpus import AnnotatedText, Span
from .errors import ConfigError

DEFAULT_ABBREVIATIONS_FILE = Path(__file__).parent / "data" / "abbreviations.txt"

_CLOSERS = "\"')]}»”’"
_OPENERS = "\"'([{«„“‚‘"
_BLANK_LINE = re.compile(r"\n[^\S\n]*\n")


def load_abbreviations(path=DEFAULT_ABBREVIATIONS_FILE) -> FrozenSet[str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"abbreviation file not found: {path}")
    entries = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()]
    return frozenset(e for e in entries if e)


@dataclass(frozen=True)
class SplitConfig:
    abbreviations: FrozenSet[str] = field(default_factory=load_abbreviations)
    terminators: str = ".!?"
    blank_line_terminates: bool = True

    def __post_init__(self):
        bad = [a for a in self.abbreviations if not a.endswith(".")]
        if bad:
            raise ConfigError(f"abbreviations must end with '.': {sorted(bad)}")

    @classmethod
    def from_file(cls, path, **kwargs) -> "SplitConfig":
        return cls(abbreviations=load_abbreviations(path), **kwargs)


def _candidates(text: str, cfg: SplitConfig) -> List[int]:
    term = re.escape(cfg.terminators)
    pattern = re.compile(f"[{term}]+[{re.escape(_CLOSERS)}]*(?=\\s|$)")
    out = []
    for m in pattern.finditer(text):
        run = m.group().rstrip(_CLOSERS)
        if run == "." and _is_abbreviation(text, m.start(), cfg):
            continue
        out.append(m.end())
    if cfg.blank_line_terminates:
        out.extend(m.start() for m in _BLANK_LINE.finditer(text))
    return out


def _is_abbreviation(text: str, dot: int, cfg: SplitConfig) -> bool:
    start = dot
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:dot + 1].lstrip(_OPENERS)
    return word in cfg.abbreviations


def sentence_bounds(text: str, spans: Sequence[Span] = (), cfg: SplitConfig = None) -> List[Tuple[int, int]]:
    """Character ranges of the sentences in ``text``, whitespace-trimmed.

    Boundary candidates falling strictly inside a span are suppressed.
    """
    if cfg is None:
        cfg = SplitConfig()
    cuts = sorted(
        {b for b in _candidates(text, cfg) if not any(s.start < b < s.end for s in spans)}
    )
    bounds = []
    prev = 0
    for cut in cuts + [len(text)]:
        start, end = prev, cut
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            bounds.append((start, end))
        prev = cut
    return bounds


def split_sentences(doc: AnnotatedText, cfg: SplitConfig = None) -> List[AnnotatedText]:
    sentences = []
    for sent_id, (start, end) in enumerate(sentence_bounds(doc.text, doc.spans, cfg)):
        local = [s.shifted(-start) for s in doc.spans if start <= s.start and s.end <= end]
        sentences.append(AnnotatedText(doc.text[start:end], tuple(local), doc.doc_id, sent_id))
    return sentences


def drop_unannotated(sentences: Sequence[AnnotatedText]) -> List[AnnotatedText]:
    return [s for s in sentences if s.spans]
