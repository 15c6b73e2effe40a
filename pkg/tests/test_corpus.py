import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import documents
from xlner.corpus import (
    AnnotatedText, Span, char_span_to_token_indices, from_markup, make_document,
    read_jsonl, tokenize, write_jsonl,
)
from xlner.errors import EmptyCover, OffsetError, ParseError, SpanOutOfBounds


class TestTokenize:
    def test_offsets(self):
        toks = tokenize("Die Katze saß")
        # "saß" is three code points; offsets are never bytes
        assert [(t.start, t.end) for t in toks] == [(0, 3), (4, 9), (10, 13)]
        assert [t.token_index for t in toks] == [0, 1, 2]

    def test_empty(self):
        assert tokenize("") == []
        assert tokenize(" \n\t ") == []

    def test_punctuation_stays_attached(self):
        assert [t.surface for t in tokenize("Matte.")] == ["Matte."]
        assert [t.surface for t in tokenize("The cat sat on the mat.")][-1] == "mat."

    @given(st.text(alphabet=st.sampled_from("ab.ü, \n\t"), max_size=60))
    def test_offset_faithful(self, text):
        toks = tokenize(text)
        for t in toks:
            assert t.surface == text[t.start:t.end]
            assert t.surface and not any(c.isspace() for c in t.surface)
        # every non-whitespace character is covered exactly once
        covered = [i for t in toks for i in range(t.start, t.end)]
        assert covered == [i for i, c in enumerate(text) if not c.isspace()]


class TestTokenIndices:
    doc = AnnotatedText("Aspirin 100 mg")

    def test_single(self):
        assert char_span_to_token_indices(self.doc, Span(0, 7, "Drug")) == [0]

    def test_multi(self):
        assert char_span_to_token_indices(self.doc, Span(8, 14, "Strength")) == [1, 2]

    def test_whitespace_only(self):
        with pytest.raises(EmptyCover):
            char_span_to_token_indices(self.doc, Span(7, 8, "X"))

    def test_out_of_bounds(self):
        with pytest.raises(SpanOutOfBounds):
            char_span_to_token_indices(self.doc, Span(8, 30, "X"))

    @given(documents())
    def test_contiguous(self, doc):
        for span in doc.spans:
            idx = char_span_to_token_indices(doc, span)
            assert idx and idx == list(range(idx[0], idx[-1] + 1))


class TestInvariants:
    def test_overlap_rejected(self):
        with pytest.raises(OffsetError):
            AnnotatedText("abc def", (Span(0, 5, "A"), Span(4, 7, "B")))

    def test_unsorted_rejected(self):
        with pytest.raises(OffsetError):
            AnnotatedText("abc def", (Span(4, 7, "A"), Span(0, 3, "B")))

    def test_whitespace_edge_rejected(self):
        with pytest.raises(OffsetError):
            AnnotatedText("abc def", (Span(0, 4, "A"),))

    def test_make_document_trims_and_sorts(self):
        doc = make_document("abc def ", [Span(4, 8, "B"), Span(0, 4, "A")])
        assert doc.spans == (Span(0, 3, "A"), Span(4, 7, "B"))

    def test_markup(self):
        doc = from_markup("Nimm {Drug:Aspirin} {Strength:100 mg}.")
        assert doc.text == "Nimm Aspirin 100 mg."
        assert [doc.surface(s) for s in doc.spans] == ["Aspirin", "100 mg"]


class TestJsonl:
    def test_round_trip_bytes(self, tmp_path):
        docs = [
            from_markup("{Drug:Aspirin} 100 mg", "a", 0),
            from_markup("Übelkeit nach {Drug:Ibuprofen}.", "b", None),
            AnnotatedText("leer", (), "c", 2),
        ]
        first, second = tmp_path / "1.jsonl", tmp_path / "2.jsonl"
        write_jsonl(first, docs)
        assert read_jsonl(first) == docs
        write_jsonl(second, read_jsonl(first))
        assert first.read_bytes() == second.read_bytes()
        assert "Übelkeit" in first.read_text(encoding="utf-8")

    def test_field_order(self, tmp_path):
        path = tmp_path / "x.jsonl"
        write_jsonl(path, [from_markup("{Drug:A}", "d", 0)])
        assert list(json.loads(path.read_text())) == ["doc_id", "sent_id", "text", "spans"]

    def test_missing_text(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"text": "ok", "spans": []}\n{"spans": []}\n')
        with pytest.raises(ParseError) as err:
            read_jsonl(path)
        assert err.value.line == 2

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{not json\n")
        with pytest.raises(ParseError) as err:
            read_jsonl(path)
        assert err.value.line == 1

    def test_span_past_end(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"text": "abc", "spans": [{"start": 0, "end": 9, "label": "Drug"}]}\n')
        with pytest.raises(OffsetError):
            read_jsonl(path)

    @settings(max_examples=200)
    @given(st.lists(documents(), max_size=5))
    def test_surfaces_survive_round_trip(self, tmp_path_factory, docs):
        path = tmp_path_factory.mktemp("rt") / "docs.jsonl"
        write_jsonl(path, docs)
        back = read_jsonl(path)
        for a, b in zip(docs, back):
            assert [a.surface(s) for s in a.spans] == [b.surface(s) for s in b.spans]
        assert back == docs
