"""Pipeline configuration loaded from a TOML file."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .corpus import DEFAULT_LABELS, EXCLUDED_BY_DEFAULT
from .errors import ConfigError
from .infill import CATEGORIES, DEFAULT_PATTERNS, POOL_FILES, MaskPattern
from .ner.train import TrainConfig

CONFIG_ENV = "XLNER_CONFIG"


@dataclass
class PipelineConfig:
    input: Optional[Path] = None
    output_dir: Path = Path("xlner-out")
    translations: Optional[Path] = None
    seed: int = 0
    labels: Tuple[str, ...] = DEFAULT_LABELS
    exclude_labels: Tuple[str, ...] = EXCLUDED_BY_DEFAULT
    patterns_file: Optional[Path] = None
    pool_files: Dict[str, Path] = field(default_factory=dict)
    date_formats: Optional[Tuple[str, ...]] = None
    phone_format: Optional[str] = None
    abbreviations_file: Optional[Path] = None
    # extra word pairs used only as EM training data
    lexicon: Optional[Path] = None
    align_iterations: int = 5
    tension: float = 4.0
    p_null: float = 0.08
    threshold: float = 1.8
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self, need_input=True) -> None:
        problems: List[str] = []
        if need_input:
            if self.input is None:
                problems.append("no input corpus configured")
            elif not Path(self.input).is_file():
                problems.append(f"input corpus not found: {self.input}")
        if self.translations is not None and not Path(self.translations).is_file():
            problems.append(f"translation file not found: {self.translations}")
        if self.patterns_file is not None and not Path(self.patterns_file).is_file():
            problems.append(f"mask pattern file not found: {self.patterns_file}")
        if self.lexicon is not None and not Path(self.lexicon).is_file():
            problems.append(f"alignment lexicon not found: {self.lexicon}")
        if self.abbreviations_file is not None and not Path(self.abbreviations_file).is_file():
            problems.append(f"abbreviation file not found: {self.abbreviations_file}")
        for cat, path in self.pool_files.items():
            if cat not in POOL_FILES:
                problems.append(f"{cat} has no surrogate list (list-backed: {sorted(POOL_FILES)})")
            elif not Path(path).is_file():
                problems.append(f"surrogate pool file for {cat} not found: {path}")
        if not self.threshold > 0:
            problems.append(f"filter threshold must be positive, got {self.threshold}")
        if not self.tension > 0:
            problems.append(f"tension must be positive, got {self.tension}")
        if not 0 <= self.p_null < 1:
            problems.append(f"p_null must lie in [0, 1), got {self.p_null}")
        if self.align_iterations < 1:
            problems.append("align iterations must be >= 1")
        allowed = set(self.labels) | set(EXCLUDED_BY_DEFAULT)
        unknown = sorted(set(self.exclude_labels) - allowed)
        if unknown:
            problems.append(f"cannot exclude unknown labels {unknown}")
        if problems:
            raise ConfigError("; ".join(problems))

    def mask_patterns(self) -> Tuple[MaskPattern, ...]:
        if self.patterns_file is None:
            return DEFAULT_PATTERNS
        return load_patterns(self.patterns_file)

    def resolved(self) -> dict:
        """JSON-ready view with paths as strings."""
        out = asdict(self)
        for key, value in list(out.items()):
            if isinstance(value, Path):
                out[key] = str(value)
            elif isinstance(value, tuple):
                out[key] = list(value)
        out["pool_files"] = {k: str(v) for k, v in self.pool_files.items()}
        out["train"]["split"] = list(self.train.split)
        return out


def load_patterns(path) -> Tuple[MaskPattern, ...]:
    """TOML file with ``[[patterns]]`` tables holding ``regex`` and ``category``."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    entries = data.get("patterns")
    if not entries:
        raise ConfigError(f"{path}: no [[patterns]] entries")
    patterns = []
    for entry in entries:
        if entry.get("category") not in CATEGORIES:
            raise ConfigError(f"{path}: unknown mask category {entry.get('category')!r}")
        patterns.append(MaskPattern(entry["regex"], entry["category"]))
    return tuple(patterns)


def _path(base: Path, value) -> Optional[Path]:
    if value in (None, ""):
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


_TRAIN_KEYS = {"lr", "beta1", "beta2", "eps", "split", "eval_every", "max_iter",
               "batch_size", "lr_decay"}


def load_config(path=None) -> PipelineConfig:
    """Read a config file; relative paths resolve against the file's directory.

    Without ``path`` the ``XLNER_CONFIG`` environment variable is consulted;
    with neither, defaults are returned.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV)
        if not path:
            return PipelineConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    base = path.parent
    cfg = PipelineConfig()
    infill = data.get("infill", {})
    split = data.get("split", {})
    align = data.get("align", {})
    filt = data.get("filter", {})
    train = data.get("train", {})
    unknown_train = set(train) - _TRAIN_KEYS
    if unknown_train:
        raise ConfigError(f"unknown [train] keys: {sorted(unknown_train)}")
    if "split" in train:
        train["split"] = tuple(train["split"])
    seed = int(data.get("seed", cfg.seed))
    try:
        train_cfg = TrainConfig(seed=seed, **train)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[train]: {exc}") from exc
    return replace(
        cfg,
        input=_path(base, data.get("input")),
        output_dir=_path(base, data.get("output_dir")) or cfg.output_dir,
        translations=_path(base, data.get("translations")),
        seed=seed,
        labels=tuple(data.get("labels", cfg.labels)),
        exclude_labels=tuple(data.get("exclude_labels", cfg.exclude_labels)),
        patterns_file=_path(base, infill.get("patterns_file")),
        pool_files={k: _path(base, v) for k, v in infill.get("pools", {}).items()},
        date_formats=tuple(infill["date_formats"]) if "date_formats" in infill else None,
        phone_format=infill.get("phone_format"),
        abbreviations_file=_path(base, split.get("abbreviations")),
        lexicon=_path(base, align.get("lexicon")),
        align_iterations=int(align.get("iterations", cfg.align_iterations)),
        tension=float(align.get("tension", cfg.tension)),
        p_null=float(align.get("p_null", cfg.p_null)),
        threshold=float(filt.get("threshold", cfg.threshold)),
        train=train_cfg,
    )
