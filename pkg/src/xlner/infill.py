"""Replace typed anonymization masks with sampled surrogate values.

Entity spans are shifted by the cumulative length change of every
replacement that precedes them, so each span keeps covering the same
surface string.
"""

from __future__ import annotations

import datetime
import hashlib
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .corpus import AnnotatedText, Span
from .errors import ConfigError, MaskOverlapsAnnotation, UnknownCategory

CATEGORIES = (
    "FirstName", "LastName", "FullName", "Date", "Year",
    "Phone", "IdNumber", "Hospital", "Age", "Other",
)

DATA_DIR = Path(__file__).parent / "data"
POOL_DIR = DATA_DIR / "pools"

# list-backed categories and the pool file that feeds them
POOL_FILES = {
    "FirstName": "first_names.txt",
    "LastName": "last_names.txt",
    "Hospital": "hospitals.txt",
    "Other": "cities.txt",
}

DEFAULT_DATE_FORMATS = ("%d.%m.%Y", "%Y-%m-%d", "%m/%d/%Y")


@dataclass(frozen=True)
class MaskPattern:
    regex: str
    category: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise UnknownCategory(self.category)
        try:
            object.__setattr__(self, "_compiled", re.compile(self.regex))
        except re.error as exc:
            raise ConfigError(f"bad mask regex {self.regex!r}: {exc}") from exc

    @property
    def compiled(self) -> re.Pattern:
        return self._compiled


def _mask(body: str) -> str:
    return r"(?i)\[\*\*\s*(?:" + body + r")[^\]]*?\*\*\]"


# ordered by priority: earlier patterns claim a region first
DEFAULT_PATTERNS = (
    MaskPattern(_mask(r"year\b|\d{4}\s*(?=\*)"), "Year"),
    MaskPattern(_mask(r"\d{1,4}[-/]\d{1,2}(?:[-/]\d{1,4})?|date\b|month\b|day\b|holiday\b"), "Date"),
    MaskPattern(_mask(r"telephone|phone|fax|pager"), "Phone"),
    MaskPattern(_mask(r"age\b"), "Age"),
    MaskPattern(_mask(r"[^\]]*?(?:number|\bid\b|identifier)"), "IdNumber"),
    MaskPattern(_mask(r"hospital|clinic|ward\b"), "Hospital"),
    MaskPattern(_mask(r"(?:known |doctor )?last ?name"), "LastName"),
    MaskPattern(_mask(r"full name|patient name|name\s*\("), "FullName"),
    MaskPattern(_mask(r"(?:known |doctor )?(?:first ?)?name"), "FirstName"),
    MaskPattern(r"\[\*\*[^\]]*?\*\*\]", "Other"),
)


def _read_pool_file(path) -> List[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [line.strip() for line in lines if line.strip()]


@dataclass
class SurrogatePool:
    """Surrogate sources per category.

    Name-like categories draw from word lists; numeric and date categories
    are generated from formats.
    """

    lists: Dict[str, List[str]] = field(default_factory=dict)
    date_formats: Sequence[str] = DEFAULT_DATE_FORMATS
    year_range: Tuple[int, int] = (1950, 2030)
    phone_format: str = "0###/#######"
    id_format: str = "########"
    age_range: Tuple[int, int] = (18, 89)

    def __post_init__(self):
        for category, entries in self.lists.items():
            if not entries:
                raise ConfigError(f"surrogate pool for {category} is empty")

    @classmethod
    def from_files(cls, paths: Optional[Dict[str, str]] = None, **kwargs) -> "SurrogatePool":
        """Load list-backed pools; ``paths`` overrides the bundled files per category."""
        files = {cat: POOL_DIR / name for cat, name in POOL_FILES.items()}
        for cat, path in (paths or {}).items():
            if cat not in POOL_FILES:
                raise UnknownCategory(f"{cat} is not a list-backed category")
            files[cat] = Path(path)
        lists = {}
        for cat, path in files.items():
            if not Path(path).is_file():
                raise ConfigError(f"pool file for {cat} not found: {path}")
            lists[cat] = _read_pool_file(path)
        return cls(lists=lists, **kwargs)


def default_pool() -> SurrogatePool:
    return SurrogatePool.from_files()


def doc_rng(seed: int, doc_id: str) -> random.Random:
    """Per-document RNG stream so output does not depend on processing order."""
    digest = hashlib.sha256(f"{seed}\x00{doc_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _fill_digits(template: str, rng: random.Random) -> str:
    return "".join(str(rng.randrange(10)) if ch == "#" else ch for ch in template)


def sample_replacement(category: str, rng: random.Random, pool: SurrogatePool) -> str:
    if category not in CATEGORIES:
        raise UnknownCategory(category)
    if category == "FullName":
        return f"{_choose(pool, 'FirstName', rng)} {_choose(pool, 'LastName', rng)}"
    if category in POOL_FILES:
        return _choose(pool, category, rng)
    if category == "Year":
        return str(rng.randint(*pool.year_range))
    if category == "Date":
        lo = datetime.date(pool.year_range[0], 1, 1).toordinal()
        hi = datetime.date(pool.year_range[1], 12, 31).toordinal()
        day = datetime.date.fromordinal(rng.randint(lo, hi))
        return day.strftime(rng.choice(list(pool.date_formats)))
    if category == "Phone":
        return _fill_digits(pool.phone_format, rng)
    if category == "IdNumber":
        return _fill_digits(pool.id_format, rng)
    return str(rng.randint(*pool.age_range))


def _choose(pool, category, rng):
    entries = pool.lists.get(category)
    if not entries:
        raise UnknownCategory(f"no surrogate list for {category}")
    return rng.choice(entries)


@dataclass
class InfillReport:
    counts: Counter = field(default_factory=Counter)
    # (doc_id, category, (start, end) in the original text, replacement length)
    replacements: List[Tuple[str, str, Tuple[int, int], int]] = field(default_factory=list)

    def add(self, doc_id, category, region, length):
        self.counts[category] += 1
        self.replacements.append((doc_id, category, region, length))

    def merge(self, other: "InfillReport") -> None:
        self.counts.update(other.counts)
        self.replacements.extend(other.replacements)

    def tsv_lines(self) -> List[str]:
        lines = ["doc_id\tcategory\tstart\tend\treplacement_length"]
        for doc_id, cat, (start, end), length in self.replacements:
            lines.append(f"{doc_id}\t{cat}\t{start}\t{end}\t{length}")
        return lines


def detect_masks(doc: AnnotatedText, patterns=DEFAULT_PATTERNS) -> List[Tuple[Span, str]]:
    """Find mask regions; earlier patterns win where matches overlap."""
    claimed: List[Tuple[Span, str]] = []
    for pattern in patterns:
        for m in pattern.compiled.finditer(doc.text):
            if m.start() == m.end():
                continue
            region = Span(m.start(), m.end(), pattern.category)
            if any(region.overlaps(r) for r, _ in claimed):
                continue
            claimed.append((region, pattern.category))
    claimed.sort(key=lambda rc: rc[0].start)
    for region, _ in claimed:
        for span in doc.spans:
            if region.overlaps(span):
                raise MaskOverlapsAnnotation(
                    f"doc {doc.doc_id!r}: mask {region.start}-{region.end} "
                    f"intersects {span.label} span {span.start}-{span.end}"
                )
    return claimed


def infill_document(doc: AnnotatedText, patterns=DEFAULT_PATTERNS, pool=None, seed=0):
    """Replace every mask in ``doc``; returns ``(new_doc, report)``."""
    if pool is None:
        pool = default_pool()
    report = InfillReport()
    regions = detect_masks(doc, patterns)
    if not regions:
        return doc, report
    rng = doc_rng(seed, doc.doc_id)
    pieces = []
    cursor = 0
    # (original position, cumulative delta after the replacement ending there)
    shifts = []
    delta = 0
    for region, category in regions:
        surrogate = sample_replacement(category, rng, pool)
        pieces.append(doc.text[cursor:region.start])
        pieces.append(surrogate)
        cursor = region.end
        delta += len(surrogate) - (region.end - region.start)
        shifts.append((region.end, delta))
        report.add(doc.doc_id, category, (region.start, region.end), len(surrogate))
    pieces.append(doc.text[cursor:])
    text = "".join(pieces)

    spans = []
    for span in doc.spans:
        offset = 0
        for end, cumulative in shifts:
            if end <= span.start:
                offset = cumulative
            else:
                break
        spans.append(span.shifted(offset))
    return AnnotatedText(text, tuple(spans), doc.doc_id, doc.sent_id), report


def infill_corpus(docs, patterns=DEFAULT_PATTERNS, pool=None, seed=0):
    if pool is None:
        pool = default_pool()
    report = InfillReport()
    out = []
    for doc in docs:
        new_doc, doc_report = infill_document(doc, patterns, pool, seed)
        report.merge(doc_report)
        out.append(new_doc)
    return out, report
