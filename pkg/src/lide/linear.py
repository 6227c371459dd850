"""Multinomial Naive Bayes and L2-regularised softmax regression on n-gram counts."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import log_softmax, logsumexp

from lide.base import TextClassifier, softmax_rows
from lide.corpus import Corpus, label_indices
from lide.errors import LideError, TrainingError
from lide.features import (
    NgramSpec,
    SparseVector,
    Vocabulary,
    build_vocab,
    count_matrix,
    ngrams_up_to,
)

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 1.0
# Word-boundary-restricted char 1..9-grams.
DEFAULT_LINEAR_SPEC = NgramSpec("char", 1, 9, "restricted")


def _as_csr(X) -> sp.csr_matrix:
    if isinstance(X, SparseVector):
        raise TypeError("pass a matrix of rows, not a single SparseVector")
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected a 2-D feature matrix")
    return sp.csr_matrix(X)


def _check_classes(y: np.ndarray, n_classes: int) -> None:
    counts = np.bincount(y, minlength=n_classes)
    if len(counts) > n_classes:
        raise LideError(f"label index {len(counts) - 1} out of range for {n_classes} classes")
    empty = np.flatnonzero(counts == 0)
    if len(empty):
        raise LideError(f"class index {int(empty[0])} has no training examples")


# ----------------------------------------------------------------------------
# Multinomial Naive Bayes
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class MnbModel(TextClassifier):
    log_prior: np.ndarray        # (C,)
    log_likelihood: np.ndarray   # (C, V)
    alpha: float
    classes: tuple[str, ...]
    spec: NgramSpec | None = None
    vocab: Vocabulary | None = None

    def log_posterior_rows(self, X) -> np.ndarray:
        joint = _as_csr(X) @ self.log_likelihood.T + self.log_prior
        return joint - logsumexp(joint, axis=1, keepdims=True)

    def proba(self, texts: Sequence[str]) -> np.ndarray:
        return np.exp(self.log_posterior_rows(count_matrix(texts, self.spec, self.vocab)))


def train_mnb(rows, labels, alpha: float = DEFAULT_ALPHA, n_classes: int | None = None,
              classes: Sequence[str] | None = None) -> MnbModel:
    """Smoothed maximum-likelihood estimates.

    ``log P(t|c) = log((count(t,c) + alpha) / (sum_t count(t,c) + alpha * V))``
    and class priors proportional to class frequencies.
    """
    if not alpha > 0:
        raise LideError("alpha must be positive")
    X = _as_csr(rows)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != len(y):
        raise LideError("rows and labels differ in length")
    C = n_classes if n_classes is not None else (len(classes) if classes else int(y.max()) + 1)
    _check_classes(y, C)
    V = X.shape[1]
    Y = sp.csr_matrix((np.ones(len(y)), (y, np.arange(len(y)))), shape=(C, len(y)))
    fc = np.asarray((Y @ X).todense())
    log_lik = np.log(fc + alpha) - np.log(fc.sum(axis=1, keepdims=True) + alpha * V)
    class_n = np.bincount(y, minlength=C).astype(np.float64)
    log_prior = np.log(class_n) - np.log(class_n.sum())
    classes = tuple(classes) if classes is not None else tuple(str(i) for i in range(C))
    return MnbModel(log_prior, log_lik, float(alpha), classes)


def mnb_log_posterior(model: MnbModel, x: SparseVector) -> np.ndarray:
    joint = model.log_prior + x.counts.astype(np.float64) @ model.log_likelihood[:, x.indices].T
    return joint - logsumexp(joint)


# ----------------------------------------------------------------------------
# Softmax regression
# ----------------------------------------------------------------------------

@dataclass
class LogRegConfig:
    lam: float = 1e-4
    epochs: int = 10
    lr: float = 0.1
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(eq=False)
class LogRegModel(TextClassifier):
    W: np.ndarray                # (C, V)
    b: np.ndarray                # (C,)
    config: LogRegConfig
    classes: tuple[str, ...]
    spec: NgramSpec | None = None
    vocab: Vocabulary | None = None
    history: list[tuple[int, float, float | None]] = field(default_factory=list)

    def logits_rows(self, X) -> np.ndarray:
        return np.asarray(_as_csr(X) @ self.W.T) + self.b

    def proba_rows(self, X) -> np.ndarray:
        return softmax_rows(self.logits_rows(X))

    def proba(self, texts: Sequence[str]) -> np.ndarray:
        if self.spec is None:
            raise LideError("this model works on feature rows, not text")
        return self.proba_rows(count_matrix(texts, self.spec, self.vocab))


def logreg_proba(model: LogRegModel, x: SparseVector | np.ndarray) -> np.ndarray:
    if isinstance(x, SparseVector):
        z = model.W[:, x.indices] @ x.counts.astype(np.float64) + model.b
    else:
        z = model.W @ np.asarray(x, dtype=np.float64) + model.b
    return np.exp(log_softmax(z))


def logreg_objective(W: np.ndarray, b: np.ndarray, X, y, lam: float):
    """Mean cross-entropy plus ``lam/2 * ||W||^2`` and its gradients (gW, gb)."""
    X = _as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    logp = log_softmax(np.asarray(X @ W.T) + b, axis=1)
    loss = -logp[np.arange(n), y].mean() + 0.5 * lam * float(np.sum(W * W))
    G = np.exp(logp)
    G[np.arange(n), y] -= 1.0
    G /= n
    gW = np.asarray((X.T @ G).T) + lam * W
    gb = G.sum(axis=0)
    return loss, gW, gb


def _accuracy(W, b, X, y) -> float:
    z = np.asarray(X @ W.T) + b
    return float(np.mean(np.argmax(z, axis=1) == y))


def train_logreg(rows, labels, n_classes: int | None = None, lam: float = 1e-4, epochs: int = 10,
                 lr: float = 0.1, seed: int = 0, batch_size: int = 64,
                 classes: Sequence[str] | None = None, valid=None) -> LogRegModel:
    """Mini-batch SGD on mean cross-entropy with an L2 penalty on ``W``.

    Each step applies the data gradient to the features the batch touches and
    then the closed-form proximal step of the penalty, ``W <- W / (1 + lr*lam)``,
    which stays stable for any ``lam``. The shrink is kept as a global scale so
    untouched columns cost nothing. Weights start at zero; the bias is not
    penalised. ``valid`` is an optional ``(rows, labels)`` pair recorded in
    :attr:`LogRegModel.history`.
    """
    cfg = LogRegConfig(lam, epochs, lr, batch_size, seed)
    X = _as_csr(rows)
    y = np.asarray(labels, dtype=np.int64)
    n, V = X.shape
    if n != len(y):
        raise LideError("rows and labels differ in length")
    if n == 0:
        raise LideError("no training rows")
    C = n_classes if n_classes is not None else (len(classes) if classes else int(y.max()) + 1)
    if y.min() < 0 or y.max() >= C:
        raise LideError("label index out of range")
    if valid is not None:
        Xv, yv = _as_csr(valid[0]), np.asarray(valid[1], dtype=np.int64)

    # W = scale * Wt, stored feature-major for row gathers.
    Wt = np.zeros((V, C))
    scale = 1.0
    b = np.zeros(C)
    shrink = 1.0 / (1.0 + lr * lam)
    rng = np.random.default_rng(seed)
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        for bi, start in enumerate(range(0, n, batch_size)):
            Xb = X[order[start:start + batch_size]]
            yb = y[order[start:start + batch_size]]
            cols, local = np.unique(Xb.indices, return_inverse=True)
            Xl = sp.csr_matrix((Xb.data, local.ravel(), Xb.indptr), shape=(Xb.shape[0], len(cols)))
            logp = log_softmax(scale * np.asarray(Xl @ Wt[cols]) + b, axis=1)
            loss = -logp[np.arange(len(yb)), yb].mean()
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {bi}")
            G = np.exp(logp)
            G[np.arange(len(yb)), yb] -= 1.0
            G /= len(yb)
            Wt[cols] -= (lr / scale) * np.asarray(Xl.T @ G)
            b -= lr * G.sum(axis=0)
            scale *= shrink
            if scale < 1e-8:
                Wt *= scale
                scale = 1.0
        W = (scale * Wt).T
        train_acc = _accuracy(W, b, X, y)
        valid_acc = _accuracy(W, b, Xv, yv) if valid is not None else None
        history.append((epoch, train_acc, valid_acc))
        log.debug("epoch %d train_acc %.4f valid_acc %s", epoch, train_acc, valid_acc)
    W = np.ascontiguousarray((scale * Wt).T)
    if not np.all(np.isfinite(W)):
        raise TrainingError("non-finite weights after training")
    classes = tuple(classes) if classes is not None else tuple(str(i) for i in range(C))
    return LogRegModel(W, b, cfg, classes, history=history)


# ----------------------------------------------------------------------------
# Corpus-level entry points
# ----------------------------------------------------------------------------

def featurize(corpus: Corpus, spec: NgramSpec, vocab: Vocabulary | None = None,
              min_count: int = 1, max_size: int | None = None):
    """Build (or reuse) a vocabulary and return ``(vocab, X)`` for ``corpus``."""
    if vocab is None:
        vocab = build_vocab((ngrams_up_to(t, spec) for t in corpus.texts), min_count, max_size)
    return vocab, count_matrix(corpus.texts, spec, vocab)


def fit_mnb(train: Corpus, spec: NgramSpec = DEFAULT_LINEAR_SPEC, alpha: float = DEFAULT_ALPHA,
            min_count: int = 1, max_size: int | None = None) -> MnbModel:
    train = train.known()
    classes = train.present_codes()
    vocab, X = featurize(train, spec, min_count=min_count, max_size=max_size)
    model = train_mnb(X, label_indices(train.labels, classes), alpha, classes=classes)
    model.spec, model.vocab = spec, vocab
    return model


def fit_logreg(train: Corpus, spec: NgramSpec = DEFAULT_LINEAR_SPEC, config: LogRegConfig | None = None,
               valid: Corpus | None = None, min_count: int = 1,
               max_size: int | None = None) -> LogRegModel:
    config = config or LogRegConfig()
    train = train.known()
    classes = train.present_codes()
    vocab, X = featurize(train, spec, min_count=min_count, max_size=max_size)
    valid_rows = None
    if valid is not None:
        valid = valid.known().with_labels(classes)
        valid_rows = (count_matrix(valid.texts, spec, vocab), label_indices(valid.labels, classes))
    model = train_logreg(
        X, label_indices(train.labels, classes), len(classes), config.lam, config.epochs,
        config.lr, config.seed, config.batch_size, classes=classes, valid=valid_rows,
    )
    model.spec, model.vocab = spec, vocab
    return model
