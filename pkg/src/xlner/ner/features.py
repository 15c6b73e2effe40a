"""String features hashed into fixed-size embedding tables."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

FEATURES = ("lower", "prefix", "suffix", "shape")


def word_shape(word: str, max_run: int = 4) -> str:
    """Map letters to X/x and digits to d, capping runs of one class at ``max_run``."""
    out = []
    prev, run = "", 0
    for ch in word:
        if ch.isalpha():
            c = "X" if ch.isupper() else "x"
        elif ch.isdigit():
            c = "d"
        else:
            c = ch
        run = run + 1 if c == prev else 1
        prev = c
        if run <= max_run:
            out.append(c)
    return "".join(out)


def extract(word: str, feature: str) -> str:
    if feature == "lower":
        return word.lower()
    if feature == "prefix":
        return word[:3]
    if feature == "suffix":
        return word[-3:]
    if feature == "shape":
        return word_shape(word)
    raise ValueError(f"unknown feature {feature!r}")


@lru_cache(maxsize=1 << 18)
def stable_hash(value: str, seed: int) -> int:
    digest = hashlib.blake2b(value.encode("utf-8"), digest_size=8, salt=seed.to_bytes(8, "little"))
    return int.from_bytes(digest.digest(), "little")


@dataclass(frozen=True)
class EmbedConfig:
    features: Tuple[str, ...] = FEATURES
    rows: int = 2000
    width: int = 96
    pieces: int = 3
    seeds: Tuple[int, ...] = (11, 12, 13, 14)

    def __post_init__(self):
        if not self.features:
            raise ValueError("need at least one feature")
        for f in self.features:
            if f not in FEATURES:
                raise ValueError(f"unknown feature {f!r}")
        if len(self.seeds) < len(self.features):
            raise ValueError("one hash seed per feature required")
        if self.rows < 1 or self.width < 1 or self.pieces < 1:
            raise ValueError("rows, width and pieces must be positive")

    @property
    def n_embed(self) -> int:
        return len(self.features)


def feature_ids(words: Sequence[str], cfg: EmbedConfig) -> np.ndarray:
    """(n_words, n_embed) bucket indices; collisions are accepted."""
    ids = np.empty((len(words), cfg.n_embed), dtype=np.int64)
    for r, word in enumerate(words):
        for k, feature in enumerate(cfg.features):
            ids[r, k] = stable_hash(extract(word, feature), cfg.seeds[k]) % cfg.rows
    return ids
