"""Alignment-quality filter and source-to-target span projection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .align import AlignmentMatrix, ParallelPair
from .corpus import AnnotatedText, Span, char_span_to_token_indices, tokenize
from .errors import DimensionMismatch

NO_ALIGNED_TOKENS = "NoAlignedTokens"
PROJECTION_COLLISION = "ProjectionCollision"


@dataclass(frozen=True)
class FilterParams:
    t: float = 1.8

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"threshold must be positive, got {self.t}")


@dataclass
class ProjectionResult:
    target: AnnotatedText
    filter_score: float
    kept: bool
    dropped_spans: List[Tuple[Span, str]] = field(default_factory=list)


def filter_score(A) -> float:
    """Mean distance of the matrix's nonzero cells to its corner-to-corner
    diagonal, normalized by the longer sentence length.

    For 1-based row ``i`` (target) and column ``j`` (source)::

        |w_en - i*w_en + i - w_de + j*w_de - j| / sqrt((w_en-1)^2 + (w_de-1)^2)

    summed over nonzero cells and divided by ``max(w_en, w_de)``. A 1x1
    matrix scores 0.
    """
    if isinstance(A, AlignmentMatrix):
        A.check()
        w_en, w_de, cells = A.w_en, A.w_de, A.A
    else:
        cells = np.asarray(A, dtype=bool)
        w_de, w_en = cells.shape
    if w_en < 1 or w_de < 1:
        raise DimensionMismatch(f"empty alignment matrix ({w_de}x{w_en})")
    norm = math.hypot(w_en - 1, w_de - 1)
    if norm == 0:
        return 0.0
    rows, cols = np.nonzero(cells)
    i = rows + 1
    j = cols + 1
    dist = np.abs(w_en - i * w_en + i - w_de + j * w_de - j) / norm
    return float(dist.sum()) / max(w_en, w_de)


def apply_filter(A, params: FilterParams = FilterParams()) -> bool:
    """True if the pair is kept; pairs scoring strictly above ``t`` are discarded."""
    return filter_score(A) <= params.t


def project_spans(pair: ParallelPair, A: AlignmentMatrix, params: FilterParams = FilterParams()) -> ProjectionResult:
    src_tokens = tokenize(pair.source.text)
    tgt_tokens = tokenize(pair.target.text)
    A.check()
    if A.w_en != len(src_tokens) or A.w_de != len(tgt_tokens):
        raise DimensionMismatch(
            f"pair {pair.pair_id!r}: matrix {A.w_de}x{A.w_en} vs "
            f"{len(tgt_tokens)} target / {len(src_tokens)} source tokens"
        )
    score = filter_score(A)
    dropped: List[Tuple[Span, str]] = []
    placed: List[Span] = []
    # source spans are sorted by start, so earlier spans claim target text first
    for span in pair.source.spans:
        cols = char_span_to_token_indices(pair.source, span, src_tokens)
        rows = np.flatnonzero(A.A[:, cols].any(axis=1))
        if rows.size == 0:
            dropped.append((span, NO_ALIGNED_TOKENS))
            continue
        projected = Span(tgt_tokens[rows.min()].start, tgt_tokens[rows.max()].end, span.label)
        if any(projected.overlaps(p) for p in placed):
            dropped.append((span, PROJECTION_COLLISION))
            continue
        placed.append(projected)
    target = AnnotatedText(
        pair.target.text, tuple(sorted(placed)), pair.target.doc_id or pair.source.doc_id,
        pair.target.sent_id if pair.target.sent_id is not None else pair.source.sent_id,
    )
    return ProjectionResult(target, score, score <= params.t, dropped)
