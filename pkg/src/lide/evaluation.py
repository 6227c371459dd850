"""Accuracy, confusion matrices, n-gram sweeps and the prefix-scan probe."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from lide.base import TextClassifier
from lide.corpus import Corpus, Registry
from lide.errors import LideError
from lide.features import NgramSpec, word_spans
from lide.linear import LogRegConfig, fit_logreg, fit_mnb


def accuracy(predictions: Sequence[str], golds: Sequence[str]) -> float:
    if len(predictions) != len(golds):
        raise LideError(f"{len(predictions)} predictions for {len(golds)} gold labels")
    if not golds:
        raise LideError("accuracy of an empty set is undefined")
    return sum(p == g for p, g in zip(predictions, golds)) / len(golds)


@dataclass(eq=False)
class ConfusionMatrix:
    """Counts with rows = gold label, columns = predicted label."""

    labels: tuple[str, ...]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)

    def errors(self) -> int:
        return self.total - int(np.trace(self.counts))

    def cell(self, gold: str, predicted: str) -> int:
        return int(self.counts[self.labels.index(gold), self.labels.index(predicted)])

    def project(self, mapping: dict[str, str], order: Sequence[str]) -> "ConfusionMatrix":
        """Sum cells after relabelling rows and columns through ``mapping``."""
        P = np.zeros((len(self.labels), len(order)), dtype=np.int64)
        for i, lab in enumerate(self.labels):
            P[i, order.index(mapping[lab])] = 1
        return ConfusionMatrix(tuple(order), P.T @ self.counts @ P)

    def collapse(self, registry: Registry) -> "ConfusionMatrix":
        """Group-level view following the registry's language groups."""
        mapping = {c: registry.language(c).group for c in self.labels}
        return self.project(mapping, list(registry.group_names))

    def write_csv(self, f: TextIO) -> None:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["gold\\predicted", *self.labels])
        for lab, row in zip(self.labels, self.counts):
            w.writerow([lab, *row.tolist()])


def confusion(predictions: Sequence[str], golds: Sequence[str], registry: Registry,
              collapse_groups: bool = False, labels: Sequence[str] | None = None) -> ConfusionMatrix:
    """Confusion matrix over ``labels`` (default: every registry code, in registry order)."""
    if len(predictions) != len(golds):
        raise LideError(f"{len(predictions)} predictions for {len(golds)} gold labels")
    labels = tuple(labels) if labels is not None else registry.codes
    index = {c: i for i, c in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for p, g in zip(predictions, golds):
        for lab in (p, g):
            if lab not in index:
                raise LideError(f"unknown label {lab!r}")
        counts[index[g], index[p]] += 1
    cm = ConfusionMatrix(labels, counts)
    return cm.collapse(registry) if collapse_groups else cm


def evaluate_model(model: TextClassifier, corpus: Corpus) -> tuple[float, list[str]]:
    corpus = corpus.known()
    predictions = model.predict(corpus.texts)
    return accuracy(predictions, corpus.labels), predictions


# ----------------------------------------------------------------------------
# N-gram sweeps
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    n: int
    spec: str
    accuracy: float


def ngram_sweep(train: Corpus, valid: Corpus, kind: str, unit: str, n_values: Sequence[int],
                boundary: str = "restricted", alpha: float = 1.0,
                logreg: LogRegConfig | None = None) -> list[SweepRow]:
    """Validation accuracy of a model trained on all orders ``1..n`` for each ``n``.

    Each ``n`` is trained from scratch.
    """
    if not n_values:
        raise LideError("empty n range")
    rows = []
    for n in n_values:
        spec = NgramSpec(unit, 1, n, boundary if unit == "char" else "restricted")
        if kind == "mnb":
            model = fit_mnb(train, spec, alpha)
        elif kind == "logreg":
            model = fit_logreg(train, spec, logreg)
        else:
            raise LideError(f"unknown model kind {kind!r}; expected 'mnb' or 'logreg'")
        acc, _ = evaluate_model(model, valid)
        rows.append(SweepRow(n, str(spec), acc))
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], f: TextIO) -> None:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["n", "spec", "accuracy"])
    for r in rows:
        w.writerow([r.n, r.spec, repr(float(r.accuracy))])


# ----------------------------------------------------------------------------
# Prefix scan
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PrefixStep:
    k: int
    prefix: str
    label: str
    proba: np.ndarray


@dataclass(frozen=True)
class PrefixTrajectory:
    sentence: str
    classes: tuple[str, ...]
    steps: tuple[PrefixStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def labels(self) -> list[str]:
        return [s.label for s in self.steps]

    def switches(self) -> list[int]:
        """Word counts ``k`` at which the prediction differs from the previous prefix."""
        return [b.k for a, b in zip(self.steps, self.steps[1:]) if a.label != b.label]

    def write_tsv(self, f: TextIO) -> None:
        for s in self.steps:
            probs = ",".join(repr(float(p)) for p in s.proba)
            f.write(f"{s.k}\t{s.prefix}\t{s.label}\t{probs}\n")


def prefix_scan(model: TextClassifier, sentence: str) -> PrefixTrajectory:
    """Classify the first 1, 2, ..., K words of ``sentence``.

    Prefixes are slices of the original text, so the last one is the sentence
    itself minus trailing whitespace.
    """
    spans = word_spans(sentence)
    if not spans:
        raise LideError("prefix scan needs a sentence with at least one word")
    prefixes = [sentence[:end] for _, end in spans]
    P = model.proba(prefixes)
    steps = tuple(
        PrefixStep(k, pre, model.classes[int(np.argmax(p))], p)
        for k, (pre, p) in enumerate(zip(prefixes, P), start=1)
    )
    return PrefixTrajectory(sentence, tuple(model.classes), steps)
