"""Corpus statistics and label exclusion."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence

from .corpus import AnnotatedText, tokenize
from .segment import drop_unannotated

# Published counts for the original synthesized corpus, kept for reference
# output only; they cannot be recomputed without the licensed source data.
REFERENCE_COUNTS = {
    "Drug": 8305, "Route": 4071, "Strength": 4549, "Frequency": 4238,
    "Duration": 409, "Form": 5242, "Dosage": 3419,
}
REFERENCE_SENTENCES = 8599
REFERENCE_TOKENS = 172695


@dataclass
class CorpusStats:
    sentences: int = 0
    tokens: int = 0
    label_counts: Dict[str, int] = field(default_factory=dict)

    @property
    def annotations(self) -> int:
        return sum(self.label_counts.values())

    @property
    def mean_annotations(self) -> float:
        return self.annotations / self.sentences if self.sentences else 0.0

    def to_json(self) -> dict:
        return {
            "sentences": self.sentences,
            "tokens": self.tokens,
            "annotations": self.annotations,
            "mean_annotations_per_sentence": round(self.mean_annotations, 6),
            "label_counts": dict(self.label_counts),
        }

    def table(self) -> str:
        width = max([len("NER Tag")] + [len(k) for k in self.label_counts])
        lines = [f"{'NER Tag':<{width}} | {'Count':>7}", "-" * (width + 10)]
        lines += [f"{k:<{width}} | {v:>7}" for k, v in self.label_counts.items()]
        lines.append("-" * (width + 10))
        lines.append(f"{self.sentences} sentences, {self.tokens} tokens, "
                     f"{self.annotations} annotations "
                     f"({self.mean_annotations:.2f} per sentence)")
        return "\n".join(lines)


def compute_stats(corpus: Iterable[AnnotatedText], labels: Sequence[str] = ()) -> CorpusStats:
    """Sentences, whitespace tokens and span counts per label.

    ``labels`` fixes the row order; labels seen only in the data follow in
    sorted order.
    """
    counts: Counter = Counter()
    n_sent = n_tok = 0
    for doc in corpus:
        n_sent += 1
        n_tok += len(tokenize(doc.text))
        counts.update(s.label for s in doc.spans)
    ordered = {label: counts.get(label, 0) for label in labels}
    for label in sorted(set(counts) - set(ordered)):
        ordered[label] = counts[label]
    return CorpusStats(n_sent, n_tok, ordered)


def exclude_labels(corpus: Sequence[AnnotatedText], labels: Iterable[str]) -> List[AnnotatedText]:
    """Remove spans with the given labels, then drop sentences left without spans."""
    banned = set(labels)
    if not banned:
        return list(corpus)
    stripped = [d.with_spans(s for s in d.spans if s.label not in banned) for d in corpus]
    return drop_unannotated(stripped)
