"""Hash-embedding + residual CNN + greedy transition parser, in numpy.

Pipeline per batch of sentences (all tokens stacked into one matrix):

1. embed: per-feature table lookups -> per-feature dense layers (summed)
   -> maxout -> layer norm
2. encode: ``depth`` residual layers of window concatenation -> dense ->
   maxout
3. precompute: one dense projection per token, split into three slot
   blocks (current token, entity start, previous token)
4. parse: for each state, sum the three slot vectors, maxout, score the
   actions, mask illegal ones

Everything runs in float64; gradients are derived by hand.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from ..corpus import DEFAULT_LABELS, AnnotatedText, Span, TokenSpan, tokenize
from .features import EmbedConfig, feature_ids
from .transitions import ActionSet, ParserState, gold_transitions, token_spans_to_chars

FORMAT_TAG = "xlner-ner/1"
N_SLOTS = 3
LN_EPS = 1e-6


@dataclass(frozen=True)
class EncoderConfig:
    depth: int = 4
    window: int = 1
    pieces: int = 3

    def __post_init__(self):
        if self.depth < 1 or self.window < 0 or self.pieces < 1:
            raise ValueError("depth >= 1, window >= 0 and pieces >= 1 required")

    @property
    def receptive_field(self) -> int:
        return self.depth * self.window


@dataclass(frozen=True)
class ParserConfig:
    hidden: int = 64
    pieces: int = 2


class Example(NamedTuple):
    """A sentence prepared for teacher-forced training."""

    ids: np.ndarray      # (n_tokens, n_embed) feature buckets
    actions: np.ndarray  # (n_tokens,) gold action ids
    slots: np.ndarray    # (n_tokens, 3) local token index per state slot, -1 = sentinel
    legal: np.ndarray    # (n_tokens, n_actions) legality mask per state


def maxout(z, pieces):
    zr = z.reshape(z.shape[0], -1, pieces)
    arg = zr.argmax(axis=2)
    return np.take_along_axis(zr, arg[..., None], axis=2)[..., 0], arg


def maxout_backward(dout, arg, pieces):
    dz = np.zeros(dout.shape + (pieces,))
    np.put_along_axis(dz, arg[..., None], dout[..., None], axis=2)
    return dz.reshape(dout.shape[0], -1)


def neighbor_index(lengths: Sequence[int], window: int) -> np.ndarray:
    """(n_tokens, 2*window + 1) indices of each token's window within its own
    sentence; -1 marks padding."""
    lengths = np.asarray(lengths, dtype=np.int64)
    n = int(lengths.sum())
    starts = np.repeat(np.cumsum(lengths) - lengths, lengths)
    sent_len = np.repeat(lengths, lengths)
    glob = np.arange(n)
    local = glob - starts
    d = np.arange(-window, window + 1)
    cand = local[:, None] + d[None, :]
    valid = (cand >= 0) & (cand < sent_len[:, None])
    return np.where(valid, glob[:, None] + d[None, :], -1)


def _xavier(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class NerModel:
    def __init__(self, labels=DEFAULT_LABELS, embed_cfg=None, encoder_cfg=None,
                 parser_cfg=None, seed=0, params=None):
        self.labels = tuple(labels)
        self.actions = ActionSet(self.labels)
        self.embed_cfg = embed_cfg or EmbedConfig()
        self.encoder_cfg = encoder_cfg or EncoderConfig()
        self.parser_cfg = parser_cfg or ParserConfig()
        self.params: Dict[str, np.ndarray] = params if params is not None else self._init(seed)
        self.encoder_calls = 0

    def _init(self, seed):
        rng = np.random.default_rng(seed)
        ec, nc, pc = self.embed_cfg, self.encoder_cfg, self.parser_cfg
        w = ec.width
        p = {}
        for k in range(ec.n_embed):
            # unit-scale lookups keep the pre-norm variance far above LN_EPS
            p[f"embed.table.{k}"] = rng.normal(size=(ec.rows, w))
        for k in range(ec.n_embed):
            p[f"embed.W.{k}"] = _xavier(rng, (w * ec.pieces, w), ec.n_embed * w, w * ec.pieces)
        p["embed.b"] = np.zeros(w * ec.pieces)
        p["embed.ln_g"] = np.ones(w)
        p["embed.ln_b"] = np.zeros(w)
        k_in = (2 * nc.window + 1) * w
        for layer in range(nc.depth):
            # shrink residual branches so depth does not inflate the activations
            p[f"encode.W.{layer}"] = _xavier(rng, (w * nc.pieces, k_in), k_in, w * nc.pieces) / np.sqrt(nc.depth)
            p[f"encode.b.{layer}"] = np.zeros(w * nc.pieces)
        hp = pc.hidden * pc.pieces
        p["state.W"] = _xavier(rng, (N_SLOTS * hp, w), w, hp)
        p["state.b"] = np.zeros(hp)
        # near-uniform action scores at initialization
        p["action.W"] = 0.1 * _xavier(rng, (len(self.actions), pc.hidden), pc.hidden, len(self.actions))
        p["action.b"] = np.zeros(len(self.actions))
        return p

    @property
    def width(self) -> int:
        return self.embed_cfg.width

    def copy(self) -> "NerModel":
        return NerModel(self.labels, self.embed_cfg, self.encoder_cfg, self.parser_cfg,
                        params={k: v.copy() for k, v in self.params.items()})

    # -- forward pieces ------------------------------------------------------

    def _embed(self, ids):
        p, ec = self.params, self.embed_cfg
        xs = [p[f"embed.table.{k}"][ids[:, k]] for k in range(ec.n_embed)]
        z = p["embed.b"] + sum(x @ p[f"embed.W.{k}"].T for k, x in enumerate(xs))
        m, arg = maxout(z, ec.pieces)
        mu = m.mean(axis=1, keepdims=True)
        inv = 1.0 / np.sqrt(m.var(axis=1, keepdims=True) + LN_EPS)
        xhat = (m - mu) * inv
        out = xhat * p["embed.ln_g"] + p["embed.ln_b"]
        return out, (ids, xs, arg, xhat, inv)

    def _encode(self, h, nb):
        self.encoder_calls += 1
        p, nc = self.params, self.encoder_cfg
        caches = []
        for layer in range(nc.depth):
            padded = np.vstack([h, np.zeros((1, h.shape[1]))])
            c = padded[nb].reshape(h.shape[0], -1)
            z = c @ p[f"encode.W.{layer}"].T + p[f"encode.b.{layer}"]
            y, arg = maxout(z, nc.pieces)
            caches.append((c, arg))
            h = h + y
        return h, caches

    def _precompute(self, h):
        return (h @ self.params["state.W"].T).reshape(h.shape[0], N_SLOTS, -1)

    def _score(self, F, slots):
        p, pc = self.params, self.parser_cfg
        padded = np.concatenate([F, np.zeros((1,) + F.shape[1:])])
        s = p["state.b"] + sum(padded[slots[:, k], k] for k in range(N_SLOTS))
        u, arg = maxout(s, pc.pieces)
        scores = u @ p["action.W"].T + p["action.b"]
        return scores, (u, arg)

    # -- public inference API ------------------------------------------------

    def featurize(self, tokens: Sequence[TokenSpan]) -> np.ndarray:
        return feature_ids([t.surface for t in tokens], self.embed_cfg)

    def embed(self, tokens: Sequence[TokenSpan]) -> np.ndarray:
        return self._embed(self.featurize(tokens))[0]

    def encode(self, embedded: np.ndarray) -> np.ndarray:
        nb = neighbor_index([embedded.shape[0]], self.encoder_cfg.window)
        return self._encode(embedded, nb)[0]

    def precompute_state_features(self, encoded: np.ndarray) -> np.ndarray:
        """(n_tokens, 3, hidden * pieces): one block per state slot."""
        return self._precompute(encoded)

    def _greedy(self, F, n_tokens):
        state = ParserState(n_tokens)
        while not state.is_final():
            slots = np.array([state.features()])
            scores = self._score(F, slots)[0][0]
            legal = self.actions.legal(state.open_label, state.position, n_tokens)
            scores = np.where(legal, scores, -np.inf)
            state.apply(self.actions.decode(int(np.argmax(scores))))
        return state

    def parse(self, tokens: Sequence[TokenSpan]) -> List[Span]:
        if not tokens:
            return []
        F = self.precompute_state_features(self.encode(self.embed(tokens)))
        return token_spans_to_chars(self._greedy(F, len(tokens)).entities, tokens)

    def predict(self, docs: Sequence[AnnotatedText]) -> List[AnnotatedText]:
        """Annotate ``docs`` in one batched forward pass."""
        toks = [tokenize(d.text) for d in docs]
        lengths = [len(t) for t in toks]
        out = [d.with_spans(()) for d in docs]
        if sum(lengths) == 0:
            return out
        ids = np.vstack([self.featurize(t) for t in toks if t])
        h, _ = self._embed(ids)
        h, _ = self._encode(h, neighbor_index([n for n in lengths if n], self.encoder_cfg.window))
        F = self._precompute(h)
        offset = 0
        for k, (doc, tokens) in enumerate(zip(docs, toks)):
            if not tokens:
                continue
            state = self._greedy(F[offset:offset + len(tokens)], len(tokens))
            out[k] = doc.with_spans(token_spans_to_chars(state.entities, tokens))
            offset += len(tokens)
        return out

    # -- training --------------------------------------------------------------

    def prepare(self, doc: AnnotatedText) -> Optional[Example]:
        tokens = tokenize(doc.text)
        if not tokens:
            return None
        gold = gold_transitions(tokens, doc.spans)
        state = ParserState(len(tokens))
        slots, legal = [], []
        for t in gold:
            slots.append(state.features())
            legal.append(self.actions.legal(state.open_label, state.position, len(tokens)))
            state.apply(t)
        return Example(
            self.featurize(tokens),
            np.array([self.actions.encode(t) for t in gold]),
            np.array(slots, dtype=np.int64),
            np.array(legal),
        )

    def loss_and_grads(self, batch: Sequence[Example], need_grads=True):
        """Mean teacher-forced cross-entropy over all transitions in ``batch``."""
        p, ec, nc, pc = self.params, self.embed_cfg, self.encoder_cfg, self.parser_cfg
        lengths = [len(ex.actions) for ex in batch]
        offsets = np.cumsum([0] + lengths[:-1])
        ids = np.vstack([ex.ids for ex in batch])
        slots = np.vstack([np.where(ex.slots >= 0, ex.slots + o, -1) for ex, o in zip(batch, offsets)])
        legal = np.vstack([ex.legal for ex in batch])
        gold = np.concatenate([ex.actions for ex in batch])
        n_steps = len(gold)

        h0, emb_cache = self._embed(ids)
        nb = neighbor_index(lengths, nc.window)
        h, enc_caches = self._encode(h0, nb)
        F = self._precompute(h)
        scores, (u, harg) = self._score(F, slots)

        masked = np.where(legal, scores, -np.inf)
        masked = masked - masked.max(axis=1, keepdims=True)
        probs = np.exp(masked)
        probs /= probs.sum(axis=1, keepdims=True)
        rows = np.arange(n_steps)
        loss = float(-np.mean(np.log(probs[rows, gold])))
        if not need_grads:
            return loss, None

        g = {}
        dscores = probs.copy()
        dscores[rows, gold] -= 1.0
        dscores /= n_steps
        g["action.W"] = dscores.T @ u
        g["action.b"] = dscores.sum(axis=0)
        ds = maxout_backward(dscores @ p["action.W"], harg, pc.pieces)
        g["state.b"] = ds.sum(axis=0)
        dF = np.zeros((F.shape[0] + 1,) + F.shape[1:])
        for k in range(N_SLOTS):
            np.add.at(dF[:, k], slots[:, k], ds)
        dF = dF[:-1].reshape(F.shape[0], -1)
        g["state.W"] = dF.T @ h
        dh = dF @ p["state.W"]

        width = h.shape[1]
        for layer in reversed(range(nc.depth)):
            c, arg = enc_caches[layer]
            dz = maxout_backward(dh, arg, nc.pieces)
            g[f"encode.W.{layer}"] = dz.T @ c
            g[f"encode.b.{layer}"] = dz.sum(axis=0)
            dc = (dz @ p[f"encode.W.{layer}"]).reshape(nb.shape + (width,))
            dpad = np.zeros((dh.shape[0] + 1, width))
            np.add.at(dpad, nb, dc)
            dh = dh + dpad[:-1]

        ids, xs, arg, xhat, inv = emb_cache
        g["embed.ln_g"] = (dh * xhat).sum(axis=0)
        g["embed.ln_b"] = dh.sum(axis=0)
        dxhat = dh * p["embed.ln_g"]
        dm = inv * (dxhat - dxhat.mean(axis=1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=1, keepdims=True))
        dz = maxout_backward(dm, arg, ec.pieces)
        g["embed.b"] = dz.sum(axis=0)
        for k, x in enumerate(xs):
            g[f"embed.W.{k}"] = dz.T @ x
            dtable = np.zeros_like(p[f"embed.table.{k}"])
            np.add.at(dtable, ids[:, k], dz @ p[f"embed.W.{k}"])
            g[f"embed.table.{k}"] = dtable
        return loss, g

    # -- persistence -------------------------------------------------------

    def meta(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "labels": list(self.labels),
            "embed": asdict(self.embed_cfg),
            "encoder": asdict(self.encoder_cfg),
            "parser": asdict(self.parser_cfg),
        }

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(self.meta())), **self.params)

    @classmethod
    def load(cls, path) -> "NerModel":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta.get("format") != FORMAT_TAG:
                raise ValueError(f"unsupported model format {meta.get('format')!r}")
            params = {k: data[k].astype(np.float64) for k in data.files if k != "__meta__"}
        embed = meta["embed"]
        embed_cfg = EmbedConfig(
            features=tuple(embed["features"]), rows=embed["rows"], width=embed["width"],
            pieces=embed["pieces"], seeds=tuple(embed["seeds"]),
        )
        return cls(meta["labels"], embed_cfg, EncoderConfig(**meta["encoder"]),
                   ParserConfig(**meta["parser"]), params=params)


# Module-level spellings of the model operations.

def embed(tokens, model: NerModel) -> np.ndarray:
    return model.embed(tokens)


def encode(embedded, model: NerModel) -> np.ndarray:
    return model.encode(embedded)


def precompute_state_features(encoded, model: NerModel) -> np.ndarray:
    return model.precompute_state_features(encoded)


def parse(tokens, model: NerModel) -> List[Span]:
    return model.parse(tokens)
