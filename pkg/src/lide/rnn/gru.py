"""Single-layer GRU sequence classifier trained with backpropagation through time.

Cell, with ``h_0 = 0`` and ``e_t`` the embedding of the t-th token::

    z_t = sigmoid(Wz e_t + Uz h_{t-1} + bz)
    r_t = sigmoid(Wr e_t + Ur h_{t-1} + br)
    c_t = tanh(Wc e_t + Uc (r_t * h_{t-1}) + bc)
    h_t = (1 - z_t) * h_{t-1} + z_t * c_t

The hidden states are mean-pooled (or the last one taken), inverted dropout
is applied to the pooled vector during training, and a softmax layer maps it
to class probabilities.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.special import log_softmax

from lide.base import TextClassifier
from lide.corpus import Corpus, label_indices
from lide.errors import LideError, TrainingError
from lide.features import (
    DEFAULT_MAX_LEN,
    NgramSpec,
    Vocabulary,
    build_vocab,
    encode_sequence,
    ngrams_up_to,
)
from lide.rnn import kernels

log = logging.getLogger(__name__)

PARAM_NAMES = ("E", "Wz", "Uz", "bz", "Wr", "Ur", "br", "Wc", "Uc", "bc", "Wo", "bo")
INIT_RANGE = 0.08


@dataclass(eq=False)
class GruParams:
    E: np.ndarray   # (V, d)
    Wz: np.ndarray  # (H, d)
    Uz: np.ndarray  # (H, H)
    bz: np.ndarray  # (H,)
    Wr: np.ndarray
    Ur: np.ndarray
    br: np.ndarray
    Wc: np.ndarray
    Uc: np.ndarray
    bc: np.ndarray
    Wo: np.ndarray  # (C, H)
    bo: np.ndarray  # (C,)

    @property
    def vocab_size(self) -> int:
        return self.E.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.E.shape[1]

    @property
    def hidden(self) -> int:
        return self.Uz.shape[0]

    @property
    def n_classes(self) -> int:
        return self.Wo.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "GruParams":
        return GruParams(**{k: v.copy() for k, v in self.arrays().items()})

    def zeros_like(self) -> "GruParams":
        return GruParams(**{k: np.zeros_like(v) for k, v in self.arrays().items()})

    def check(self) -> None:
        V, d, H, C = self.vocab_size, self.embed_dim, self.hidden, self.n_classes
        shapes = {
            "E": (V, d), "Wz": (H, d), "Uz": (H, H), "bz": (H,), "Wr": (H, d), "Ur": (H, H),
            "br": (H,), "Wc": (H, d), "Uc": (H, H), "bc": (H,), "Wo": (C, H), "bo": (C,),
        }
        for name, shape in shapes.items():
            a = getattr(self, name)
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")

    @classmethod
    def init(cls, V: int, d: int, H: int, C: int, rng: np.random.Generator,
             scale: float = INIT_RANGE) -> "GruParams":
        """Uniform(-scale, scale) matrices, zero biases."""
        u = lambda *shape: rng.uniform(-scale, scale, size=shape)  # noqa: E731
        return cls(
            E=u(V, d),
            Wz=u(H, d), Uz=u(H, H), bz=np.zeros(H),
            Wr=u(H, d), Ur=u(H, H), br=np.zeros(H),
            Wc=u(H, d), Uc=u(H, H), bc=np.zeros(H),
            Wo=u(C, H), bo=np.zeros(C),
        )


@dataclass(eq=False)
class ForwardCache:
    ids: np.ndarray
    X: np.ndarray
    hs: np.ndarray
    z: np.ndarray
    r: np.ndarray
    c: np.ndarray
    pooled: np.ndarray
    mask: np.ndarray | None
    proba: np.ndarray
    pooling: str


def dropout_mask(rng: np.random.Generator, size: int, p: float) -> np.ndarray | None:
    """Inverted-dropout mask: entries are 0 or ``1/(1-p)``; ``None`` when ``p == 0``."""
    if p <= 0.0:
        return None
    keep = rng.random(size) >= p
    return keep / (1.0 - p)


def gru_forward(params: GruParams, ids, dropout_mask: np.ndarray | None = None,
                pooling: str = "mean") -> tuple[np.ndarray, ForwardCache]:
    """Class probabilities for one id sequence, plus what the backward pass needs.

    ``dropout_mask`` is applied multiplicatively to the pooled hidden vector and
    must already carry the ``1/(1-p)`` scaling (see :func:`dropout_mask`).
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1 or len(ids) == 0:
        raise LideError("GRU input must be a non-empty id sequence")
    if ids.min() < 0 or ids.max() >= params.vocab_size:
        raise LideError("token id out of range")
    X = params.E[ids]
    az = X @ params.Wz.T + params.bz
    ar = X @ params.Wr.T + params.br
    ac = X @ params.Wc.T + params.bc
    hs, z, r, c = kernels.recurrence_forward(az, ar, ac, params.Uz, params.Ur, params.Uc)
    if pooling == "mean":
        pooled = hs[1:].mean(axis=0)
    elif pooling == "last":
        pooled = hs[-1].copy()
    else:
        raise ValueError(f"unknown pooling {pooling!r}")
    out = pooled * dropout_mask if dropout_mask is not None else pooled
    proba = np.exp(log_softmax(params.Wo @ out + params.bo))
    return proba, ForwardCache(ids, X, hs, z, r, c, pooled, dropout_mask, proba, pooling)


def _backward(params: GruParams, cache: ForwardCache, gold: int):
    """Gradients of ``-log p[gold]``; embedding part as (ids, per-position rows)."""
    dlogits = cache.proba.copy()
    dlogits[gold] -= 1.0
    out = cache.pooled * cache.mask if cache.mask is not None else cache.pooled
    g = {"Wo": np.outer(dlogits, out), "bo": dlogits}
    dpooled = params.Wo.T @ dlogits
    if cache.mask is not None:
        dpooled = dpooled * cache.mask
    T = len(cache.ids)
    dh_ext = np.zeros((T, params.hidden))
    if cache.pooling == "mean":
        dh_ext[:] = dpooled / T
    else:
        dh_ext[-1] = dpooled
    daz, dar, dac, g["Uz"], g["Ur"], g["Uc"] = kernels.recurrence_backward(
        cache.hs, cache.z, cache.r, cache.c, dh_ext, params.Uz, params.Ur, params.Uc
    )
    g["Wz"], g["bz"] = daz.T @ cache.X, daz.sum(axis=0)
    g["Wr"], g["br"] = dar.T @ cache.X, dar.sum(axis=0)
    g["Wc"], g["bc"] = dac.T @ cache.X, dac.sum(axis=0)
    dX = daz @ params.Wz + dar @ params.Wr + dac @ params.Wc
    return g, dX


def gru_backward(params: GruParams, cache: ForwardCache, gold: int) -> GruParams:
    """Exact gradient of the cross-entropy loss for one example, shaped like ``params``."""
    g, dX = _backward(params, cache, gold)
    dE = np.zeros_like(params.E)
    np.add.at(dE, cache.ids, dX)
    return GruParams(E=dE, **g)


def gru_loss(params: GruParams, ids, gold: int, dropout_mask: np.ndarray | None = None,
             pooling: str = "mean") -> float:
    proba, _ = gru_forward(params, ids, dropout_mask, pooling)
    return float(-np.log(proba[gold]))


class Adam:
    def __init__(self, params: GruParams, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.arrays().items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays().items()}
        self.t = 0

    def step(self, params: GruParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p = getattr(params, name)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainConfig:
    epochs: int = 10
    hidden: int = 64
    dropout: float = 0.2
    embed_dim: int = 32
    lr: float = 1e-3
    batch_size: int = 16
    max_len: int = DEFAULT_MAX_LEN
    seed: int = 0
    pooling: str = "mean"
    clip_norm: float | None = None
    min_count: int = 1
    max_vocab: int | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.hidden < 1 or self.embed_dim < 1 or self.batch_size < 1:
            raise ValueError("hidden, embed_dim and batch_size must be >= 1")
        if self.pooling not in ("mean", "last"):
            raise ValueError("pooling must be 'mean' or 'last'")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})


# Outcome of the hyper-parameter search at full DSL scale.
PAPER_CONFIG = TrainConfig(epochs=20, hidden=768, dropout=0.45)


@dataclass(eq=False)
class GruModel(TextClassifier):
    params: GruParams
    config: TrainConfig
    spec: NgramSpec
    vocab: Vocabulary
    classes: tuple[str, ...]
    history: list[tuple[int, float, float]] = field(default_factory=list)

    def encode(self, text: str) -> np.ndarray | None:
        tokens = ngrams_up_to(text, self.spec)
        if not tokens:
            return None
        return encode_sequence(tokens, self.vocab, self.config.max_len)

    def proba_ids(self, ids: np.ndarray | None) -> np.ndarray:
        if ids is None:
            return np.full(len(self.classes), 1.0 / len(self.classes))
        return gru_forward(self.params, ids, None, self.config.pooling)[0]

    def proba(self, texts: Sequence[str]) -> np.ndarray:
        """Rows of class probabilities; texts with no tokens get a uniform row."""
        return np.array([self.proba_ids(self.encode(t)) for t in texts]).reshape(len(texts), -1)


def _accuracy(params: GruParams, seqs, y, pooling: str, C: int) -> float:
    if not len(y):
        return float("nan")
    hits = 0
    for ids, gold in zip(seqs, y):
        if ids is None:
            p = np.full(C, 1.0 / C)
        else:
            p = gru_forward(params, ids, None, pooling)[0]
        hits += int(np.argmax(p) == gold)
    return hits / len(y)


def _encode_all(texts: Iterable[str], spec: NgramSpec, vocab: Vocabulary, max_len: int):
    out = []
    for t in texts:
        tokens = ngrams_up_to(t, spec)
        out.append(encode_sequence(tokens, vocab, max_len) if tokens else None)
    return out


def train_gru(train: Corpus, valid: Corpus | None, spec: NgramSpec,
              config: TrainConfig | None = None) -> GruModel:
    """Train one GRU classifier on a single n-gram order.

    Initialisation, shuffling and dropout draw from independent streams derived
    from ``config.seed``, so the same config and data give identical models.
    Per-epoch clean accuracy on ``train`` and ``valid`` is kept in ``history``.
    """
    config = config or TrainConfig()
    if not spec.single_order:
        raise ValueError("a GRU reads a single n-gram order; use n_min == n_max")
    train = train.known()
    if not len(train):
        raise LideError("empty training corpus")
    classes = train.present_codes()
    C = len(classes)
    vocab = build_vocab((ngrams_up_to(t, spec) for t in train.texts), config.min_count,
                        config.max_vocab)
    seqs = _encode_all(train.texts, spec, vocab, config.max_len)
    y = label_indices(train.labels, classes)
    usable = np.array([i for i, s in enumerate(seqs) if s is not None], dtype=np.int64)
    if len(usable) < len(seqs):
        log.info("%d training sentence(s) yield no %s tokens; skipped", len(seqs) - len(usable), spec)
    if not len(usable):
        raise LideError(f"no training sentence yields {spec} tokens")
    if valid is not None:
        valid = valid.known().with_labels(classes)
        vseqs = _encode_all(valid.texts, spec, vocab, config.max_len)
        vy = label_indices(valid.labels, classes)

    init_ss, shuffle_ss, drop_ss = np.random.SeedSequence(config.seed).spawn(3)
    params = GruParams.init(len(vocab), config.embed_dim, config.hidden, C,
                            np.random.default_rng(init_ss))
    shuffle_rng = np.random.default_rng(shuffle_ss)
    drop_rng = np.random.default_rng(drop_ss)
    opt = Adam(params, config.lr)
    history = []
    for epoch in range(1, config.epochs + 1):
        order = usable[shuffle_rng.permutation(len(usable))]
        for bi, start in enumerate(range(0, len(order), config.batch_size)):
            batch = order[start:start + config.batch_size]
            grads = {k: np.zeros_like(v) for k, v in params.arrays().items()}
            loss = 0.0
            for i in batch:
                mask = dropout_mask(drop_rng, config.hidden, config.dropout)
                proba, cache = gru_forward(params, seqs[i], mask, config.pooling)
                loss -= np.log(proba[y[i]])
                g, dX = _backward(params, cache, y[i])
                for k, v in g.items():
                    grads[k] += v
                np.add.at(grads["E"], cache.ids, dX)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {bi}")
            for v in grads.values():
                v /= len(batch)
            if config.clip_norm is not None:
                norm = np.sqrt(sum(float(np.sum(v * v)) for v in grads.values()))
                if norm > config.clip_norm:
                    for v in grads.values():
                        v *= config.clip_norm / norm
            opt.step(params, grads)
        train_acc = _accuracy(params, [seqs[i] for i in usable], y[usable], config.pooling, C)
        valid_acc = _accuracy(params, vseqs, vy, config.pooling, C) if valid is not None else float("nan")
        history.append((epoch, train_acc, valid_acc))
        log.info("%s epoch %d: train_acc %.4f valid_acc %.4f", spec, epoch, train_acc, valid_acc)
    return GruModel(params, replace(config), spec, vocab, classes, history)


def write_history_csv(history: Sequence[tuple[int, float, float]], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["epoch", "train_acc", "valid_acc"])
        for epoch, tr, va in history:
            w.writerow([epoch, repr(float(tr)), "" if va is None or np.isnan(va) else repr(float(va))])
