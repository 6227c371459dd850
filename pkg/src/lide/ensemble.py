"""Stacked ensembles of single-order GRU classifiers.

Members each read one n-gram order. Their probability vectors are
concatenated and fed to a softmax-regression meta-classifier that is trained
on a held-out split the members never saw. Median and fixed-weight
combiners are available as alternatives.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from lide.base import TextClassifier
from lide.corpus import Corpus, SplitSpec, label_indices, split
from lide.errors import LideError
from lide.features import NgramSpec
from lide.linear import LogRegModel, train_logreg
from lide.rnn.gru import TrainConfig, train_gru

log = logging.getLogger(__name__)

# char 2..5-grams and word unigrams.
DEFAULT_ROSTER = (
    NgramSpec("char", 2, 2),
    NgramSpec("char", 3, 3),
    NgramSpec("char", 4, 4),
    NgramSpec("char", 5, 5),
    NgramSpec("word", 1, 1),
)
LAMBDA_LADDER = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)
COMBINERS = ("stacker", "median", "weighted")


@dataclass
class MetaConfig:
    k: int = 5
    epochs: int = 100
    lr: float = 0.5
    batch_size: int = 64
    seed: int = 0
    ladder: tuple[float, ...] = LAMBDA_LADDER


@dataclass(eq=False)
class EnsembleModel(TextClassifier):
    members: list[TextClassifier]
    combiner: str = "stacker"
    meta: LogRegModel | None = None
    weights: np.ndarray | None = None
    cv_report: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise LideError("an ensemble needs at least one member")
        self.classes = _common_classes(self.members)
        specs = [getattr(m, "spec", None) for m in self.members]
        keyed = [(type(m).__name__, str(s)) for m, s in zip(self.members, specs)]
        if len(set(keyed)) != len(keyed):
            raise LideError("ensemble members must use pairwise distinct feature specs")
        if self.combiner not in COMBINERS:
            raise LideError(f"unknown combiner {self.combiner!r}")
        if self.combiner == "stacker":
            if self.meta is None:
                raise LideError("stacker combiner needs a meta model")
            if self.meta.W.shape[1] != len(self.members) * len(self.classes):
                raise LideError("meta model input size does not match members x classes")
        if self.combiner == "weighted":
            self.weights = check_weights(self.weights, len(self.members))

    def member_proba(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [m.proba(texts) for m in self.members]

    def combine(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        return combine(blocks, self.combiner, self.meta, self.weights)

    def proba(self, texts: Sequence[str]) -> np.ndarray:
        return self.combine(self.member_proba(texts))


def _common_classes(members: Sequence[TextClassifier]) -> tuple[str, ...]:
    classes = tuple(members[0].classes)
    for i, m in enumerate(members[1:], start=1):
        if tuple(m.classes) != classes:
            raise LideError(
                f"member {i} predicts classes {list(m.classes)}, member 0 predicts {list(classes)}"
            )
    return classes


def check_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        raise LideError("weighted combiner needs weights")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise LideError(f"expected {n} weights, got {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise LideError("weights must be nonnegative and sum to 1")
    return w


def stack_features(members: Sequence[TextClassifier], texts: Sequence[str]) -> np.ndarray:
    """Concatenate member probability vectors, in member order, one row per text."""
    _common_classes(members)
    return np.hstack([m.proba(texts) for m in members])


def combine(blocks: Sequence[np.ndarray], combiner: str, meta: LogRegModel | None = None,
            weights: np.ndarray | None = None) -> np.ndarray:
    blocks = [np.atleast_2d(b) for b in blocks]
    if combiner == "stacker":
        return meta.proba_rows(np.hstack(blocks))
    stacked = np.stack(blocks)  # (members, n, C)
    if combiner == "median":
        med = np.median(stacked, axis=0)
        total = med.sum(axis=1, keepdims=True)
        C = med.shape[1]
        return np.where(total > 0, med / np.where(total > 0, total, 1.0), 1.0 / C)
    if combiner == "weighted":
        return np.tensordot(weights, stacked, axes=1)
    raise LideError(f"unknown combiner {combiner!r}")


def _folds(n: int, k: int, seed: int) -> np.ndarray:
    fold = np.empty(n, dtype=np.int64)
    fold[np.random.default_rng(seed).permutation(n)] = np.arange(n) % k
    return fold


def train_stacker(rows: np.ndarray, labels, n_classes: int, config: MetaConfig | None = None,
                  classes: Sequence[str] | None = None) -> LogRegModel:
    """Select the L2 strength by k-fold accuracy, then refit on every row.

    Ties on mean fold accuracy go to the larger penalty. The per-lambda means
    are kept in ``model.history`` as ``(lambda, mean accuracy, None)``.
    """
    config = config or MetaConfig()
    rows = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n = len(y)
    if config.k < 2:
        raise LideError("k must be >= 2")
    if n < config.k:
        raise LideError(f"{n} rows cannot be split into {config.k} folds")
    fold = _folds(n, config.k, config.seed)
    scores = []
    for lam in config.ladder:
        accs = []
        for f in range(config.k):
            tr, te = fold != f, fold == f
            m = train_logreg(rows[tr], y[tr], n_classes, lam, config.epochs, config.lr,
                             config.seed, config.batch_size)
            accs.append(float(np.mean(np.argmax(m.logits_rows(rows[te]), axis=1) == y[te])))
        scores.append((lam, float(np.mean(accs))))
        log.debug("stacker lambda %g: mean fold accuracy %.4f", lam, scores[-1][1])
    best = max(scores, key=lambda s: (s[1], s[0]))[0]
    model = train_logreg(rows, y, n_classes, best, config.epochs, config.lr, config.seed,
                         config.batch_size, classes=classes)
    model.history = [(lam, acc, None) for lam, acc in scores]
    return model


def fit_stacker(members: Sequence[TextClassifier], held_out: Corpus,
                config: MetaConfig | None = None) -> EnsembleModel:
    """Stack already-trained members using ``held_out`` (data they did not train on)."""
    classes = _common_classes(members)
    held_out = held_out.known().with_labels(classes)
    X = stack_features(members, held_out.texts)
    y = label_indices(held_out.labels, classes)
    meta = train_stacker(X, y, len(classes), config, classes=classes)
    return EnsembleModel(list(members), "stacker", meta, cv_report=[h[:2] for h in meta.history])


def train_ensemble(train: Corpus, roster: Sequence[NgramSpec] = DEFAULT_ROSTER,
                   config: TrainConfig | None = None, meta_config: MetaConfig | None = None,
                   split_seed: int = 0, extra_members: Sequence[TextClassifier] = ()) -> EnsembleModel:
    """Train every member on 90% of ``train`` and the stacker on the other 10%."""
    config = config or TrainConfig()
    member_train, held_out = split(train.known(), SplitSpec(0.9, split_seed, True))
    members: list[TextClassifier] = []
    for spec in roster:
        log.info("training member %s", spec)
        members.append(train_gru(member_train, held_out, spec, config))
    members.extend(extra_members)
    return fit_stacker(members, held_out, meta_config)


def predict_ensemble(model: EnsembleModel, text: str) -> tuple[str, np.ndarray, list[np.ndarray]]:
    blocks = model.member_proba([text])
    p = model.combine(blocks)[0]
    return model.classes[int(np.argmax(p))], p, [b[0] for b in blocks]
