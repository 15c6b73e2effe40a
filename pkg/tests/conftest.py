from pathlib import Path

import pytest
from hypothesis import strategies as st

from xlner.corpus import AnnotatedText, Span

FIXTURES = Path(__file__).parent / "fixtures"

WORDS = ("Aspirin", "100", "mg", "täglich", "Tablette", "oral", "der", "Patient",
         "erhielt", "i.v.", "Dr.", "z.B.", "Übelkeit", "µg", "(1x)", "morgens.")


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@st.composite
def documents(draw, max_words=25, labels=("Drug", "Strength", "Form")):
    """Random whitespace-joined text with spans over whole-word runs."""
    words = draw(st.lists(st.sampled_from(WORDS), min_size=0, max_size=max_words))
    seps = draw(st.lists(st.sampled_from([" ", "  ", "\n", " \t"]),
                         min_size=len(words), max_size=len(words)))
    text, bounds, pos = "", [], 0
    for w, sep in zip(words, seps):
        bounds.append((pos, pos + len(w)))
        text += w + sep
        pos += len(w) + len(sep)
    spans, k = [], 0
    while k < len(words):
        if draw(st.booleans()):
            width = draw(st.integers(1, 3))
            last = min(k + width, len(words)) - 1
            spans.append(Span(bounds[k][0], bounds[last][1], draw(st.sampled_from(labels))))
            k = last + 1
        k += 1
    return AnnotatedText(text, tuple(spans), draw(st.sampled_from(["d1", "d2", "ü"])))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
