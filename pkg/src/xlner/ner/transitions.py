"""BILUO transition system for greedy entity parsing."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..corpus import AnnotatedText, Span, TokenSpan, tokenize
from ..errors import MisalignedSpan

log = logging.getLogger(__name__)

BEGIN, IN, LAST, UNIT, OUT = "BEGIN", "IN", "LAST", "UNIT", "OUT"
_MOVES = (BEGIN, IN, LAST, UNIT)

SENTINEL = -1


@dataclass(frozen=True)
class Transition:
    move: str
    label: Optional[str] = None

    def __str__(self):
        return self.move if self.move == OUT else f"{self.move}({self.label})"


class ActionSet:
    """Integer encoding of the transitions for a tag inventory.

    Action 0 is OUT; label ``k`` owns actions ``1 + 4k`` .. ``4 + 4k`` in
    the order BEGIN, IN, LAST, UNIT.
    """

    def __init__(self, labels: Sequence[str]):
        self.labels = tuple(labels)
        self.label_index = {label: k for k, label in enumerate(self.labels)}
        self.transitions = [Transition(OUT)] + [
            Transition(move, label) for label in self.labels for move in _MOVES
        ]
        self.index = {t: i for i, t in enumerate(self.transitions)}
        n = len(self.transitions)
        self._no_entity = np.zeros(n, dtype=bool)
        self._no_entity[0] = True
        self._no_entity_last = self._no_entity.copy()
        for k in range(len(self.labels)):
            self._no_entity[1 + 4 * k] = True  # BEGIN
            self._no_entity[4 + 4 * k] = True  # UNIT
            self._no_entity_last[4 + 4 * k] = True

    def __len__(self):
        return len(self.transitions)

    def encode(self, t: Transition) -> int:
        return self.index[t]

    def decode(self, action: int) -> Transition:
        return self.transitions[action]

    def legal(self, open_label: Optional[str], position: int, n_tokens: int) -> np.ndarray:
        """Boolean mask of the actions allowed in this state."""
        at_end = position == n_tokens - 1
        if open_label is None:
            return (self._no_entity_last if at_end else self._no_entity).copy()
        mask = np.zeros(len(self), dtype=bool)
        k = self.label_index[open_label]
        mask[3 + 4 * k] = True  # LAST
        if not at_end:
            mask[2 + 4 * k] = True  # IN
        return mask


@dataclass
class ParserState:
    n_tokens: int
    position: int = 0
    last_entity_start: int = SENTINEL
    open_label: Optional[str] = None
    committed: List[Transition] = field(default_factory=list)
    entities: List[Tuple[int, int, str]] = field(default_factory=list)

    @property
    def previous(self) -> int:
        return self.position - 1 if self.position > 0 else SENTINEL

    def features(self) -> Tuple[int, int, int]:
        """Token indices feeding the scorer: current, entity start, previous."""
        return self.position, self.last_entity_start, self.previous

    def is_final(self) -> bool:
        return self.position >= self.n_tokens

    def is_legal(self, t: Transition) -> bool:
        if self.is_final():
            return False
        at_end = self.position == self.n_tokens - 1
        if self.open_label is None:
            if t.move == OUT or t.move == UNIT:
                return True
            return t.move == BEGIN and not at_end
        if t.label != self.open_label:
            return False
        return t.move == LAST or (t.move == IN and not at_end)

    def apply(self, t: Transition) -> None:
        if not self.is_legal(t):
            raise ValueError(f"illegal transition {t} at position {self.position}")
        if t.move in (BEGIN, UNIT):
            self.last_entity_start = self.position
        if t.move == BEGIN:
            self.open_label = t.label
        elif t.move == UNIT:
            self.entities.append((self.position, self.position, t.label))
        elif t.move == LAST:
            self.entities.append((self.last_entity_start, self.position, t.label))
            self.open_label = None
        self.committed.append(t)
        self.position += 1


def token_spans_to_chars(entities, tokens: Sequence[TokenSpan]) -> List[Span]:
    return [Span(tokens[a].start, tokens[b].end, label) for a, b, label in entities]


def replay(transitions: Sequence[Transition], tokens: Sequence[TokenSpan]) -> List[Span]:
    """Character spans produced by running ``transitions`` over ``tokens``."""
    state = ParserState(len(tokens))
    for t in transitions:
        state.apply(t)
    if not state.is_final() or state.open_label is not None:
        raise ValueError("transition sequence does not complete the sentence")
    return token_spans_to_chars(state.entities, tokens)


def _token_bounds(tokens, span):
    starts = {t.start: t.token_index for t in tokens}
    ends = {t.end: t.token_index for t in tokens}
    if span.start not in starts or span.end not in ends:
        raise MisalignedSpan(f"span {span} does not start and end on token boundaries")
    return starts[span.start], ends[span.end]


def gold_transitions(tokens: Sequence[TokenSpan], spans: Sequence[Span]) -> List[Transition]:
    moves = [Transition(OUT)] * len(tokens)
    for span in spans:
        first, last = _token_bounds(tokens, span)
        if first == last:
            moves[first] = Transition(UNIT, span.label)
            continue
        moves[first] = Transition(BEGIN, span.label)
        for k in range(first + 1, last):
            moves[k] = Transition(IN, span.label)
        moves[last] = Transition(LAST, span.label)
    return moves


def snap_spans(doc: AnnotatedText, tokens=None) -> AnnotatedText:
    """Expand spans to whole tokens; a span colliding with an earlier one is dropped."""
    if tokens is None:
        tokens = tokenize(doc.text)
    snapped: List[Span] = []
    for span in doc.spans:
        covering = [t for t in tokens if t.start < span.end and span.start < t.end]
        new = Span(covering[0].start, covering[-1].end, span.label)
        if new != span:
            log.warning("doc %s: snapped span %s to token boundaries %s", doc.doc_id, span, new)
        if snapped and new.overlaps(snapped[-1]):
            log.warning("doc %s: dropped span %s colliding after snapping", doc.doc_id, span)
            continue
        snapped.append(new)
    return doc.with_spans(snapped)
