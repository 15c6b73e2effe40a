"""Unsupervised word alignment: IBM Model 2 with a diagonal position prior.

The alignment prior of target word ``i`` (of ``m``) to source word ``j``
(of ``n``), both 1-based, is::

    p_null                                             for the null word
    (1 - p_null) * exp(-tension * |i/m - j/n|) / Z_i   otherwise

Only the lexical table t(f|e) is re-estimated by EM; the tension stays
fixed. Matrices are oriented target rows x source columns.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .corpus import AnnotatedText, doc_from_json, tokenize
from .errors import DegeneratePair, DimensionMismatch, EmptyCorpus, LineCountMismatch, ParseError

log = logging.getLogger(__name__)

NULL = "<null>"
_EDGE_PUNCT = ".,;:!?()[]{}\"'«»„“”‚‘’"


def word_key(token: str) -> str:
    """Lexical key of a token: lowercased, edge punctuation stripped."""
    key = token.strip(_EDGE_PUNCT).lower()
    return key or token


@dataclass(frozen=True)
class ParallelPair:
    source: AnnotatedText
    target: AnnotatedText
    pair_id: str = ""

    def __post_init__(self):
        if isinstance(self.source, str):
            object.__setattr__(self, "source", AnnotatedText(self.source))
        if isinstance(self.target, str):
            object.__setattr__(self, "target", AnnotatedText(self.target))

    def words(self) -> Tuple[List[str], List[str]]:
        src = [word_key(t.surface) for t in tokenize(self.source.text)]
        tgt = [word_key(t.surface) for t in tokenize(self.target.text)]
        if not src or not tgt:
            raise DegeneratePair(f"pair {self.pair_id!r} has an empty side")
        return src, tgt

    def to_json(self) -> dict:
        return {"pair_id": self.pair_id, "src": self.source.to_json(), "tgt": self.target.text}


@dataclass(frozen=True)
class AlignmentMatrix:
    """Boolean matrix with ``w_de`` target rows and ``w_en`` source columns."""

    A: np.ndarray
    w_en: int
    w_de: int

    def __post_init__(self):
        A = np.array(self.A, dtype=bool)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    def check(self) -> None:
        if self.A.shape != (self.w_de, self.w_en):
            raise DimensionMismatch(
                f"matrix shape {self.A.shape} != (w_de={self.w_de}, w_en={self.w_en})"
            )

    @classmethod
    def from_links(cls, links, w_en, w_de) -> "AlignmentMatrix":
        A = np.zeros((w_de, w_en), dtype=bool)
        for j, i in links:
            A[i, j] = True
        return cls(A, w_en, w_de)

    def links(self) -> List[Tuple[int, int]]:
        """(source index, target index) pairs, 0-based, ordered by target row."""
        return [(int(j), int(i)) for i, j in zip(*np.nonzero(self.A))]

    def to_pharaoh(self) -> str:
        return " ".join(f"{j}-{i}" for j, i in sorted(self.links()))

    def to_json(self, pair_id="") -> dict:
        return {
            "pair_id": pair_id,
            "w_en": self.w_en,
            "w_de": self.w_de,
            "links": [[j, i] for j, i in sorted(self.links())],
        }

    @classmethod
    def from_json(cls, obj) -> "AlignmentMatrix":
        return cls.from_links(obj["links"], int(obj["w_en"]), int(obj["w_de"]))


@dataclass
class TranslationTable:
    """Lexical translation probabilities t(f|e) over observed co-occurrences.

    ``src_vocab`` reserves id 0 for the null word. Word pairs that never
    co-occurred in training have probability 0.
    """

    src_vocab: Dict[str, int]
    tgt_vocab: Dict[str, int]
    cells: Dict[Tuple[int, int], int]
    probs: np.ndarray
    tension: float = 4.0
    p_null: float = 0.08
    history: List[float] = field(default_factory=list)

    def prob(self, f: str, e: str) -> float:
        """t(f|e); pass ``NULL`` as ``e`` for the null word."""
        e = e if e == NULL else word_key(e)
        key = (self.src_vocab.get(e, -1), self.tgt_vocab.get(word_key(f), -1))
        idx = self.cells.get(key)
        return 0.0 if idx is None else float(self.probs[idx])

    def distribution(self, e: str) -> Dict[str, float]:
        e_id = self.src_vocab.get(e if e == NULL else word_key(e))
        if e_id is None:
            return {}
        id2f = {i: w for w, i in self.tgt_vocab.items()}
        return {id2f[f_id]: float(self.probs[idx]) for (eid, f_id), idx in self.cells.items() if eid == e_id}

    def row_sums(self) -> np.ndarray:
        e_of = self._e_of()
        return np.bincount(e_of, weights=self.probs, minlength=len(self.src_vocab))

    def _e_of(self) -> np.ndarray:
        e_of = np.empty(len(self.cells), dtype=np.int64)
        for (e_id, _), idx in self.cells.items():
            e_of[idx] = e_id
        return e_of

    def tsv_lines(self) -> List[str]:
        id2e = {i: w for w, i in self.src_vocab.items()}
        id2f = {i: w for w, i in self.tgt_vocab.items()}
        return [
            f"{id2e[e_id]}\t{id2f[f_id]}\t{self.probs[idx]:.10g}"
            for (e_id, f_id), idx in sorted(self.cells.items())
        ]


def _prior(m: int, n: int, tension: float, p_null: float) -> np.ndarray:
    """(m, n + 1) alignment prior; column 0 is the null word."""
    i = np.arange(1, m + 1)[:, None] / m
    j = np.arange(1, n + 1)[None, :] / n
    w = np.exp(-tension * np.abs(i - j))
    w *= (1.0 - p_null) / w.sum(axis=1, keepdims=True)
    return np.hstack([np.full((m, 1), p_null), w])


def _check_hyper(tension, p_null):
    if not tension > 0:
        raise ValueError(f"tension must be positive, got {tension}")
    if not 0 <= p_null < 1:
        raise ValueError(f"p_null must lie in [0, 1), got {p_null}")


class _Corpus:
    """Flattened corpus: one entry per (target token, source candidate) cell."""

    def __init__(self, pairs: Sequence[ParallelPair], tension, p_null):
        self.src_vocab = {NULL: 0}
        self.tgt_vocab: Dict[str, int] = {}
        self.cells: Dict[Tuple[int, int], int] = {}
        cell_idx, priors, rows = [], [], []
        n_rows = 0
        prior_cache = {}
        for pair in pairs:
            try:
                src, tgt = pair.words()
            except DegeneratePair as exc:
                log.warning("skipping pair: %s", exc)
                continue
            e_ids = [0] + [self.src_vocab.setdefault(w, len(self.src_vocab)) for w in src]
            f_ids = [self.tgt_vocab.setdefault(w, len(self.tgt_vocab)) for w in tgt]
            m, n = len(tgt), len(src)
            if (m, n) not in prior_cache:
                prior_cache[m, n] = _prior(m, n, tension, p_null)
            priors.append(prior_cache[m, n].ravel())
            for f in f_ids:
                for e in e_ids:
                    cell_idx.append(self.cells.setdefault((e, f), len(self.cells)))
                    rows.append(n_rows)
                n_rows += 1
        if not n_rows:
            raise EmptyCorpus("no usable sentence pairs")
        self.cell_idx = np.asarray(cell_idx, dtype=np.int64)
        self.prior = np.concatenate(priors)
        self.rows = np.asarray(rows, dtype=np.int64)
        self.n_rows = n_rows
        self.e_of = np.empty(len(self.cells), dtype=np.int64)
        for (e, _), idx in self.cells.items():
            self.e_of[idx] = e

    def e_step(self, probs):
        weights = probs[self.cell_idx] * self.prior
        row_total = np.bincount(self.rows, weights=weights, minlength=self.n_rows)
        with np.errstate(divide="ignore"):
            ll = float(np.sum(np.log(row_total)))
        safe = np.where(row_total > 0, row_total, 1.0)
        posterior = weights / safe[self.rows]
        counts = np.bincount(self.cell_idx, weights=posterior, minlength=len(self.cells))
        return counts, ll

    def normalize(self, counts):
        totals = np.bincount(self.e_of, weights=counts, minlength=len(self.src_vocab))
        denom = totals[self.e_of]
        return np.divide(counts, denom, out=np.zeros_like(counts), where=denom > 0)


def em_train(pairs: Sequence[ParallelPair], iterations=5, tension=4.0, p_null=0.08) -> TranslationTable:
    """Estimate t(f|e) by EM; ``table.history`` holds the corpus log-likelihood
    before the first iteration and after each one."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    _check_hyper(tension, p_null)
    if not pairs:
        raise EmptyCorpus("no sentence pairs")
    corpus = _Corpus(pairs, tension, p_null)
    # uniform over the target words each source word co-occurs with
    probs = corpus.normalize(np.ones(len(corpus.cells)))
    history = []
    for _ in range(iterations):
        counts, ll = corpus.e_step(probs)
        history.append(ll)
        probs = corpus.normalize(counts)
    history.append(corpus.e_step(probs)[1])
    return TranslationTable(
        corpus.src_vocab, corpus.tgt_vocab, corpus.cells, probs, tension, p_null, history
    )


def corpus_log_likelihood(pairs: Sequence[ParallelPair], table: TranslationTable) -> float:
    """Σ over target tokens of log Σ_j prior(j|i) t(f_i|e_j), null included."""
    total = 0.0
    for pair in pairs:
        try:
            src, tgt = pair.words()
        except DegeneratePair:
            continue
        prior = _prior(len(tgt), len(src), table.tension, table.p_null)
        for i, f in enumerate(tgt):
            row = prior[i, 0] * table.prob(f, NULL)
            row += sum(prior[i, j + 1] * table.prob(f, e) for j, e in enumerate(src))
            total += math.log(row) if row > 0 else -math.inf
    return total


def decode(pair: ParallelPair, table: TranslationTable) -> AlignmentMatrix:
    """Best source word (or null) for every target word."""
    src, tgt = pair.words()
    m, n = len(tgt), len(src)
    prior = _prior(m, n, table.tension, table.p_null)
    A = np.zeros((m, n), dtype=bool)
    for i, f in enumerate(tgt):
        null_score = prior[i, 0] * table.prob(f, NULL)
        scores = np.array([prior[i, j + 1] * table.prob(f, e) for j, e in enumerate(src)])
        best = scores.max()
        if null_score >= best:
            continue
        candidates = np.flatnonzero(scores == best)
        dist = np.abs((i + 1) / m - (candidates + 1) / n)
        j = candidates[np.lexsort((candidates, dist))[0]]
        A[i, j] = True
    return AlignmentMatrix(A, n, m)


# -- I/O ---------------------------------------------------------------------


def pair_from_json(obj, line=None) -> ParallelPair:
    if not isinstance(obj, dict) or "src" not in obj or "tgt" not in obj:
        raise ParseError("pair needs 'src' and 'tgt' fields", line)
    src, tgt = obj["src"], obj["tgt"]
    src = AnnotatedText(src) if isinstance(src, str) else doc_from_json(src, line)
    tgt = AnnotatedText(tgt) if isinstance(tgt, str) else doc_from_json(tgt, line)
    return ParallelPair(src, tgt, str(obj.get("pair_id", "")))


def read_pairs(path) -> List[ParallelPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            pairs.append(pair_from_json(obj, lineno))
    return pairs


def write_pairs(path, pairs: Iterable[ParallelPair]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_json(), ensure_ascii=False) + "\n")


def pair_id_for(doc: AnnotatedText, index: int) -> str:
    sent = "" if doc.sent_id is None else f":{doc.sent_id}"
    return f"{doc.doc_id}{sent}#{index}"


def make_pairs(sources: Sequence[AnnotatedText], translations: Sequence[str]) -> List[ParallelPair]:
    if len(sources) != len(translations):
        raise LineCountMismatch(
            f"{len(translations)} translations for {len(sources)} exported sentences"
        )
    return [
        ParallelPair(src, AnnotatedText(tgt, (), src.doc_id, src.sent_id), pair_id_for(src, k))
        for k, (src, tgt) in enumerate(zip(sources, translations))
    ]


def read_translations(path) -> List[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n").rstrip("\r") for line in fh]


def read_lexicon(path) -> List[ParallelPair]:
    """Training-only pairs from a TSV of ``source<TAB>target`` entries.

    Appending a bilingual word list to the bitext gives EM lexical evidence
    that a small corpus cannot supply.
    """
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ParseError("expected 'source<TAB>target'", lineno)
            pairs.append(ParallelPair(parts[0].strip(), parts[1].strip(), f"lexicon:{lineno}"))
    return pairs


def read_alignments(path) -> Dict[str, AlignmentMatrix]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out[str(obj["pair_id"])] = AlignmentMatrix.from_json(obj)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad alignment record: {exc}", lineno) from exc
    return out


def write_alignments(jsonl_path, pharaoh_path, items: Iterable[Tuple[str, AlignmentMatrix]]) -> None:
    with open(jsonl_path, "w", encoding="utf-8", newline="\n") as js, \
            open(pharaoh_path, "w", encoding="utf-8", newline="\n") as ph:
        for pair_id, matrix in items:
            js.write(json.dumps(matrix.to_json(pair_id), ensure_ascii=False) + "\n")
            ph.write(matrix.to_pharaoh() + "\n")
