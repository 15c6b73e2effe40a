"""Seeded generators for synthetic corpora used in tests and demos."""

from __future__ import annotations

import random
import re
from typing import List, Sequence, Tuple

from .align import ParallelPair
from .corpus import AnnotatedText, Span

DRUGS = (
    "Aspirin", "Ibuprofen", "Metformin", "Ramipril", "Simvastatin", "Pantoprazol",
    "Metoprolol", "Amlodipin", "Bisoprolol", "Torasemid", "Furosemid", "Heparin",
    "Insulin", "Paracetamol", "Novaminsulfon", "Diclofenac", "Omeprazol",
    "Atorvastatin", "Levothyroxin", "Candesartan", "Phenprocoumon", "Clopidogrel",
    "Apixaban", "Rivaroxaban", "Prednisolon", "Amoxicillin", "Ciprofloxacin",
    "Vancomycin", "Ceftriaxon", "Morphin", "Tramadol", "Gabapentin", "Pregabalin",
    "Sertralin", "Citalopram", "Mirtazapin", "Lorazepam", "Haloperidol", "Quetiapin",
    "Allopurinol", "Spironolacton", "Hydrochlorothiazid", "Digoxin", "Amiodaron",
    "Salbutamol", "Tiotropium", "Lisinopril", "Valsartan", "Enoxaparin",
    "Vitamin D3", "Vitamin B12", "Insulin glargin", "Kaliumchlorid", "Magnesium",
)
STRENGTH_VALUES = ("2.5", "5", "10", "20", "25", "40", "50", "75", "100", "200",
                   "250", "400", "500", "600", "800", "1000")
STRENGTH_UNITS = ("mg", "µg", "g", "IE", "mg/ml", "ml")
FORMS = ("Tablette", "Tabletten", "Kapsel", "Kapseln", "Tropfen", "Ampulle",
         "Spritze", "Infusion", "Pflaster", "Brausetablette", "Filmtabletten",
         "Zäpfchen", "Saft", "Hub", "Hübe", "Beutel")
ROUTES = ("oral", "intravenös", "i.v.", "subkutan", "s.c.", "rektal", "inhalativ",
          "topisch", "sublingual", "per os", "intramuskulär", "transdermal")
DOSAGES = ("1", "2", "3", "eine", "zwei", "drei", "1/2", "einen")
FREQUENCIES = ("täglich", "zweimal täglich", "dreimal täglich", "morgens", "abends",
               "1-0-1", "1-1-1", "0-0-1", "alle 8 Stunden", "bei Bedarf",
               "wöchentlich", "morgens und abends", "zur Nacht", "stündlich")
DURATIONS = ("7 Tage", "10 Tage", "zwei Wochen", "drei Wochen", "einen Monat",
             "drei Monate", "14 Tage", "5 Tage", "sechs Wochen", "ein Jahr")

TEMPLATES = (
    "Der Patient nimmt {Dosage} {Form} {Drug} {Strength} {Frequency} ein.",
    "{Drug} {Strength} wurde {Route} {Frequency} verabreicht.",
    "Wir empfehlen {Drug} {Strength} {Frequency} für {Duration} fortzuführen.",
    "Bei Schmerzen erhielt die Patientin {Dosage} {Form} {Drug} {Route} als Bedarfsmedikation.",
    "Die Therapie mit {Drug} wurde nach {Duration} beendet.",
    "Aktuelle Medikation: {Drug} {Strength} {Frequency} laut Plan.",
    "{Drug} wurde wegen Übelkeit abgesetzt.",
    "Zusätzlich ist {Drug} {Strength} {Form} {Route} {Frequency} für {Duration} geplant.",
    "Es erfolgte eine Umstellung von {Drug} auf {Drug} {Strength} am Vormittag.",
    "Der Hausarzt verordnete {Drug} {Dosage} {Form} {Frequency} bis auf Weiteres.",
    "Die Patientin berichtet über Kopfschmerzen seit {Duration} ohne Besserung.",
    "Nach Rücksprache wird {Drug} {Route} {Frequency} gegeben und kontrolliert.",
    "Unter {Drug} {Strength} kam es zu keiner Besserung der Beschwerden.",
    "Bitte {Dosage} {Form} {Frequency} mit reichlich Wasser einnehmen.",
    "{Frequency} {Dosage} {Form} {Drug} {Route} , danach Kontrolle.",
    "Die Dosis von {Drug} wurde auf {Strength} {Frequency} reduziert.",
    "Der Blutdruck lag bei 140 zu 90 mmHg.",
    "Die Patientin ist wach, orientiert und kreislaufstabil.",
    "Labor: Kreatinin 1.2 mg/dl, Kalium 4.1 mmol/l.",
    "Am 12.03. erfolgte die Entlassung in die Häuslichkeit.",
)

_SLOT = re.compile(r"\{(\w+)\}")


_SYLLABLES = ("lo", "xa", "pri", "ven", "ta", "mo", "zi", "dol", "ne", "ra", "fe", "cu", "bi", "sar")
_DRUG_SUFFIXES = ("mid", "pril", "statin", "xacin", "olol", "azol", "mab", "dipin", "sartan", "tin")

# probability that a Drug slot gets an invented name instead of a lexicon entry
NOVEL_DRUG_RATE = 0.3


def novel_drug(rng: random.Random) -> str:
    stem = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(1, 3)))
    return (stem + rng.choice(_DRUG_SUFFIXES)).capitalize()


def _sample(label: str, rng: random.Random) -> str:
    if label == "Drug":
        return novel_drug(rng) if rng.random() < NOVEL_DRUG_RATE else rng.choice(DRUGS)
    if label == "Strength":
        return f"{rng.choice(STRENGTH_VALUES)} {rng.choice(STRENGTH_UNITS)}"
    if label == "Form":
        return rng.choice(FORMS)
    if label == "Route":
        return rng.choice(ROUTES)
    if label == "Dosage":
        return rng.choice(DOSAGES)
    if label == "Frequency":
        return rng.choice(FREQUENCIES)
    if label == "Duration":
        return rng.choice(DURATIONS)
    raise ValueError(label)


def fill_template(template: str, rng: random.Random, doc_id="", sent_id=None) -> AnnotatedText:
    pieces, spans = [], []
    pos = 0
    cursor = 0
    for m in _SLOT.finditer(template):
        literal = template[cursor:m.start()]
        pieces.append(literal)
        pos += len(literal)
        value = _sample(m.group(1), rng)
        spans.append(Span(pos, pos + len(value), m.group(1)))
        pieces.append(value)
        pos += len(value)
        cursor = m.end()
    pieces.append(template[cursor:])
    return AnnotatedText("".join(pieces), tuple(spans), doc_id, sent_id)


def medication_corpus(n: int, seed: int = 0, templates: Sequence[str] = TEMPLATES) -> List[AnnotatedText]:
    """``n`` templated German medication sentences with gold spans."""
    rng = random.Random(seed)
    return [
        fill_template(rng.choice(templates), rng, f"syn{seed}-{k:05d}", 0)
        for k in range(n)
    ]


def cipher_corpus(n_pairs=500, vocab_size=20, min_len=4, max_len=12, swap_prob=0.3, seed=0):
    """Parallel corpus from a 1:1 word cipher with local reordering.

    Words are drawn without replacement inside a sentence so every gold link
    is unambiguous; adjacent target words are swapped with ``swap_prob``,
    which moves each word at most one position. Returns ``(pairs, links)``
    where ``links[k]`` is the set of gold ``(source, target)`` index pairs.
    """
    rng = random.Random(seed)
    src_vocab = [f"w{k}" for k in range(vocab_size)]
    cipher = dict(zip(src_vocab, rng.sample([f"Z{k:02d}" for k in range(vocab_size)], vocab_size)))
    pairs, links = [], []
    for k in range(n_pairs):
        length = rng.randint(min_len, min(max_len, vocab_size))
        src = rng.sample(src_vocab, length)
        order = list(range(length))
        i = 0
        while i < length - 1:
            if rng.random() < swap_prob:
                order[i], order[i + 1] = order[i + 1], order[i]
                i += 2
            else:
                i += 1
        tgt = [cipher[src[j]] for j in order]
        pairs.append(ParallelPair(" ".join(src), " ".join(tgt), f"cipher-{k}"))
        links.append({(j, i) for i, j in enumerate(order)})
    return pairs, links


# -- masked clinical-style documents ----------------------------------------

SAMPLE_MASKS = (
    "[**NAME**]", "[**Known lastname 123**]", "[**First Name8 (NamePattern2) **]",
    "[**Name (NI) 77**]", "[**2112-10-3**]", "[**10-23**]", "[**Year (4 digits) 11**]",
    "[**Telephone/Fax (2) 123**]", "[**Age over 90 **]", "[**Medical Record Number**]",
    "[**Hospital1 18**]", "[**Location (un) 5**]", "[**Doctor Last Name **]",
)
FILLER = ("Patient", "erhielt", "wurde", "am", "die", "mit", "und", "bei",
          "Aufnahme", "Kontrolle", "der", "Befund", "nach", "Station", "in")
ENTITY_SURFACES = (
    ("Aspirin", "Drug"), ("Vit. D3", "Drug"), ("Tbl. Metformin", "Drug"),
    ("100 mg", "Strength"), ("2.5 mg", "Strength"), ("i.v.", "Route"), ("p.o.", "Route"),
    ("2 x tgl.", "Frequency"), ("b.i.d.", "Frequency"), ("7 Tage", "Duration"),
    ("Tabletten", "Form"), ("zwei", "Dosage"), ("Übelkeit!", "ADE"),
)
BREAKS = (". ", "! ", "? ", ".\n\n", " Dr. ", " z.B. ", "\n\n", " ")


def masked_document(rng: random.Random, doc_id: str, n_segments: int = 20) -> AnnotatedText:
    """Random text mixing filler words, masks, abbreviations and entity spans."""
    pieces: List[str] = []
    spans: List[Span] = []
    pos = 0

    def emit(s):
        nonlocal pos
        pieces.append(s)
        pos += len(s)

    for _ in range(n_segments):
        kind = rng.random()
        if kind < 0.25:
            surface, label = rng.choice(ENTITY_SURFACES)
            spans.append(Span(pos, pos + len(surface), label))
            emit(surface)
        elif kind < 0.45:
            emit(rng.choice(SAMPLE_MASKS))
        else:
            emit(rng.choice(FILLER))
        emit(rng.choice(BREAKS) if rng.random() < 0.3 else " ")
    return AnnotatedText("".join(pieces).rstrip(), tuple(spans), doc_id, None)


def pseudo_translate(doc: AnnotatedText, lexicon: dict) -> str:
    """Word-by-word substitution; unknown words are copied."""
    return " ".join(lexicon.get(w, w) for w in doc.text.split())


def pairs_from_docs(docs: Sequence[AnnotatedText], translations: Sequence[str]) -> List[ParallelPair]:
    return [ParallelPair(d, t, f"{d.doc_id}#{k}") for k, (d, t) in enumerate(zip(docs, translations))]


def gold_surfaces(doc: AnnotatedText) -> List[Tuple[str, str]]:
    return [(doc.surface(s), s.label) for s in doc.spans]
