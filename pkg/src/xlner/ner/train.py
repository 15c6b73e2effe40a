"""Teacher-forced training with Adam and validation-F1 model selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..corpus import DEFAULT_LABELS, AnnotatedText
from ..errors import DivergedLoss, EmptyDataset
from .evaluate import evaluate
from .model import EncoderConfig, NerModel, ParserConfig
from .features import EmbedConfig
from .transitions import snap_spans

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    split: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    eval_every: int = 200
    max_iter: int = 2000
    batch_size: int = 16
    seed: int = 0
    # linear decay of the learning rate to zero over max_iter
    lr_decay: bool = False

    def __post_init__(self):
        if len(self.split) != 3 or abs(sum(self.split) - 1.0) > 1e-9 or min(self.split) < 0:
            raise ValueError(f"split fractions must be three non-negative numbers summing to 1: {self.split}")
        if self.eval_every < 1 or self.max_iter < 1 or self.batch_size < 1:
            raise ValueError("eval_every, max_iter and batch_size must be positive")


class Adam:
    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, lr):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, grad in grads.items():
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            params[name] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainingLog:
    evaluations: List[Tuple[int, float, float, float]] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    best_iteration: Optional[int] = None
    best_f1: float = -1.0

    def csv_lines(self) -> List[str]:
        lines = ["iteration,precision,recall,f1"]
        lines += [f"{it},{p:.4f},{r:.4f},{f:.4f}" for it, p, r, f in self.evaluations]
        return lines


def split_dataset(docs: Sequence, fractions=(0.8, 0.1, 0.1), seed=0):
    """Shuffle and cut into train / validation / test.

    Train gets ``floor(n * f_train)``, validation ``round(n * f_val)`` and
    test the remainder (8599 -> 6879 / 860 / 860).
    """
    n = len(docs)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(n * fractions[0] + 1e-9))
    n_val = min(int(round(n * fractions[1])), n - n_train)
    pick = [docs[i] for i in order]
    return pick[:n_train], pick[n_train:n_train + n_val], pick[n_train + n_val:]


def fit(model: NerModel, train_docs: Sequence[AnnotatedText], val_docs: Sequence[AnnotatedText],
        cfg: TrainConfig = TrainConfig()):
    """Train in place; returns the checkpoint with the best validation F1 and the log.

    Validation runs every ``cfg.eval_every`` iterations. Without any
    evaluation point the final weights are returned.
    """
    examples = [ex for ex in (model.prepare(snap_spans(d)) for d in train_docs) if ex is not None]
    if not examples:
        raise EmptyDataset("no trainable sentences")
    rng = np.random.default_rng(cfg.seed)
    adam = Adam(model.params, cfg.beta1, cfg.beta2, cfg.eps)
    history = TrainingLog()
    best = None
    queue: List[int] = []
    for it in range(1, cfg.max_iter + 1):
        if not queue:
            queue = rng.permutation(len(examples)).tolist()
        batch = [examples[i] for i in queue[:cfg.batch_size]]
        del queue[:cfg.batch_size]
        loss, grads = model.loss_and_grads(batch)
        if not math.isfinite(loss):
            raise DivergedLoss(f"loss became {loss} at iteration {it}")
        history.losses.append(loss)
        lr = cfg.lr * (1.0 - (it - 1) / cfg.max_iter) if cfg.lr_decay else cfg.lr
        adam.step(model.params, grads, lr)
        if it % cfg.eval_every == 0:
            scores = evaluate(model, val_docs)
            p, r, f = scores.total
            history.evaluations.append((it, p, r, f))
            log.info("iteration %d: loss %.4f  val P %.2f R %.2f F1 %.2f", it, loss, p, r, f)
            if f > history.best_f1:
                history.best_f1, history.best_iteration = f, it
                best = model.copy()
    for name, value in model.params.items():
        if not np.all(np.isfinite(value)):
            raise DivergedLoss(f"parameter {name} is not finite after training")
    return (best if best is not None else model), history


def collect_labels(docs, base=DEFAULT_LABELS):
    extra = sorted({s.label for d in docs for s in d.spans} - set(base))
    return tuple(base) + tuple(extra)


def train(docs: Sequence[AnnotatedText], train_cfg: TrainConfig = TrainConfig(),
          embed_cfg: EmbedConfig = None, encoder_cfg: EncoderConfig = None,
          parser_cfg: ParserConfig = None, labels=None):
    """Split, train and select; returns ``(model, log, (train, val, test))``."""
    if not docs:
        raise EmptyDataset("empty dataset")
    docs = [snap_spans(d) for d in docs]
    train_docs, val_docs, test_docs = split_dataset(docs, train_cfg.split, train_cfg.seed)
    model = NerModel(labels or collect_labels(docs), embed_cfg, encoder_cfg, parser_cfg, seed=train_cfg.seed)
    model, history = fit(model, train_docs, val_docs, train_cfg)
    return model, history, (train_docs, val_docs, test_docs)
