"""Entity-level exact-match precision / recall / F1."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from ..corpus import AnnotatedText


def prf(tp: int, fp: int, fn: int):
    """Precision, recall and F1 in percent; 0 where undefined."""
    p = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    r = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class Scores:
    labels: List[str]
    tp: Counter = field(default_factory=Counter)
    fp: Counter = field(default_factory=Counter)
    fn: Counter = field(default_factory=Counter)

    def tag(self, label):
        return prf(self.tp[label], self.fp[label], self.fn[label])

    @property
    def total(self):
        return prf(sum(self.tp.values()), sum(self.fp.values()), sum(self.fn.values()))

    @property
    def f1(self) -> float:
        return self.total[2]

    def as_dict(self) -> Dict[str, Dict[str, float]]:
        rows = {label: dict(zip(("precision", "recall", "f1"), self.tag(label))) for label in self.labels}
        rows["total"] = dict(zip(("precision", "recall", "f1"), self.total))
        return rows

    def tsv_lines(self) -> List[str]:
        lines = ["tag\tprecision\trecall\tf1\ttp\tfp\tfn"]
        for label in self.labels:
            p, r, f = self.tag(label)
            lines.append(f"{label}\t{p:.2f}\t{r:.2f}\t{f:.2f}\t{self.tp[label]}\t{self.fp[label]}\t{self.fn[label]}")
        p, r, f = self.total
        lines.append(
            f"total\t{p:.2f}\t{r:.2f}\t{f:.2f}\t{sum(self.tp.values())}"
            f"\t{sum(self.fp.values())}\t{sum(self.fn.values())}"
        )
        return lines

    def table(self) -> str:
        width = max([len("NER Tag"), len("total")] + [len(label) for label in self.labels])
        head = f"{'NER Tag':<{width}} | {'Precision':>9} {'Recall':>9} {'F1-Score':>9}"
        rule = "-" * len(head)
        out = [head, rule]
        for label in self.labels:
            p, r, f = self.tag(label)
            out.append(f"{label:<{width}} | {p:9.2f} {r:9.2f} {f:9.2f}")
        out.append("=" * len(head))
        p, r, f = self.total
        out.append(f"{'total':<{width}} | {p:9.2f} {r:9.2f} {f:9.2f}")
        return "\n".join(out)


def score_spans(gold: Sequence[AnnotatedText], predicted: Sequence[AnnotatedText], labels=()) -> Scores:
    """Compare span sets document by document; a hit needs identical (start, end, label)."""
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold documents vs {len(predicted)} predicted")
    seen = list(labels)
    scores = Scores(seen)
    for g, p in zip(gold, predicted):
        gset = {(s.start, s.end, s.label) for s in g.spans}
        pset = {(s.start, s.end, s.label) for s in p.spans}
        for key in gset & pset:
            scores.tp[key[2]] += 1
        for key in pset - gset:
            scores.fp[key[2]] += 1
        for key in gset - pset:
            scores.fn[key[2]] += 1
    extra = sorted((set(scores.tp) | set(scores.fp) | set(scores.fn)) - set(seen))
    scores.labels = seen + extra
    return scores


def evaluate(model, docs: Sequence[AnnotatedText]) -> Scores:
    return score_spans(docs, model.predict(docs), model.labels)
