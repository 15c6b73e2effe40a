"""Transition-based neural NER."""

from .evaluate import Scores, evaluate, prf, score_spans
from .features import EmbedConfig, feature_ids, word_shape
from .model import (
    EncoderConfig, NerModel, ParserConfig, embed, encode, parse, precompute_state_features,
)
from .train import Adam, TrainConfig, TrainingLog, fit, split_dataset, train
from .transitions import (
    ActionSet, ParserState, Transition, gold_transitions, replay, snap_spans,
)

__all__ = [
    "ActionSet", "Adam", "EmbedConfig", "EncoderConfig", "NerModel", "ParserConfig",
    "ParserState", "Scores", "TrainConfig", "TrainingLog", "Transition", "embed", "encode",
    "evaluate", "feature_ids", "fit", "gold_transitions", "parse", "precompute_state_features",
    "prf", "replay", "score_spans", "snap_spans", "split_dataset", "train", "word_shape",
]
