from xlner.corpus import from_markup
from xlner.stats import REFERENCE_COUNTS, compute_stats, exclude_labels

# 4 sentences, 31 tokens, Drug x3 and Dosage x2
FIXTURE = [
    from_markup("Der Patient erhielt {Drug:Aspirin} am frühen Morgen.", "s", 0),
    from_markup("Danach wurden {Dosage:zwei} Tabletten {Drug:Ibuprofen} gegeben.", "s", 1),
    from_markup("Die Kontrolle am Abend war ohne Befund.", "s", 2),
    from_markup("Am Folgetag nahm er {Dosage:eine} Kapsel {Drug:Vitamin D3} zur Nacht ein.", "s", 3),
]


class TestComputeStats:
    def test_fixture(self):
        stats = compute_stats(FIXTURE, ("Drug", "Dosage"))
        assert (stats.sentences, stats.tokens) == (4, 31)
        assert stats.label_counts == {"Drug": 3, "Dosage": 2}
        assert stats.annotations == 5
        assert stats.mean_annotations == 1.25

    def test_multi_token_span_counts_once(self):
        assert compute_stats([FIXTURE[3]]).label_counts == {"Dosage": 1, "Drug": 1}

    def test_empty(self):
        stats = compute_stats([], ("Drug",))
        assert (stats.sentences, stats.tokens, stats.annotations) == (0, 0, 0)
        assert stats.label_counts == {"Drug": 0}
        assert stats.mean_annotations == 0.0

    def test_table_and_json(self):
        stats = compute_stats(FIXTURE, ("Drug", "Dosage"))
        assert stats.to_json()["label_counts"] == {"Drug": 3, "Dosage": 2}
        assert "4 sentences, 31 tokens" in stats.table()

    def test_reference_counts(self):
        assert sum(REFERENCE_COUNTS.values()) == 30233


class TestExcludeLabels:
    corpus = [
        from_markup("{Drug:Aspirin} bei {Reason:Kopfschmerz}"),
        from_markup("wegen {Reason:Fieber}"),
        from_markup("{ADE:Übelkeit} nach {Drug:Ibuprofen}"),
    ]

    def test_removes(self):
        out = exclude_labels(self.corpus, {"Reason", "ADE"})
        assert all(s.label not in {"Reason", "ADE"} for d in out for s in d.spans)

    def test_empty_set_is_identity(self):
        assert exclude_labels(self.corpus, set()) == self.corpus

    def test_sentence_left_empty_is_dropped(self):
        out = exclude_labels(self.corpus, {"Reason", "ADE"})
        assert [d.text for d in out] == ["Aspirin bei Kopfschmerz", "Übelkeit nach Ibuprofen"]
