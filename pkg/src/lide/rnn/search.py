"""Two-stage hyper-parameter search over epochs, hidden size and dropout.

Stage 1 varies one axis at a time around a base configuration. The epoch
axis comes from a single run's per-epoch validation curve. Stage 2 fixes the
best epoch count and grid-searches every pairing of the top hidden sizes and
dropout rates from stage 1.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from lide.corpus import Corpus, SplitSpec, split
from lide.errors import LideError
from lide.features import NgramSpec
from lide.rnn.gru import TrainConfig, train_gru

# Given a config, return validation accuracy after each epoch.
Evaluator = Callable[[TrainConfig], Sequence[float]]


@dataclass(frozen=True)
class SearchGrid:
    epochs: tuple[int, ...] = (5, 10, 15, 20)
    hidden: tuple[int, ...] = (32, 64, 128)
    dropout: tuple[float, ...] = (0.0, 0.2, 0.45)

    def __post_init__(self):
        for name in ("epochs", "hidden", "dropout"):
            if not getattr(self, name):
                raise LideError(f"search grid for {name} is empty")


@dataclass(frozen=True)
class SearchRow:
    stage: int
    epochs: int
    hidden: int
    dropout: float
    accuracy: float


def select_best(rows: Sequence[SearchRow], tol: float = 0.0) -> SearchRow:
    """Highest accuracy; within ``tol`` of it prefer smaller hidden, then larger dropout."""
    if not rows:
        raise LideError("nothing to select from")
    top = max(r.accuracy for r in rows)
    tied = [r for r in rows if r.accuracy >= top - tol]
    return min(tied, key=lambda r: (r.hidden, -r.dropout, r.epochs))


def _top(values_acc: list[tuple[float, float]], k: int, prefer) -> list:
    ranked = sorted(values_acc, key=lambda va: (-va[1], prefer(va[0])))
    return [v for v, _ in ranked[:k]]


def corpus_evaluator(devel: Corpus, spec: NgramSpec, split_seed: int = 0) -> Evaluator:
    """Train on 75% of ``devel`` and score on the other 25%."""
    train, valid = split(devel.known(), SplitSpec(0.75, split_seed, True))

    def evaluate(config: TrainConfig) -> list[float]:
        model = train_gru(train, valid, spec, config)
        return [va for _, _, va in model.history]

    return evaluate


def two_stage_search(evaluate: Evaluator, grid: SearchGrid, base: TrainConfig | None = None,
                     top_k: int = 2) -> tuple[TrainConfig, list[SearchRow]]:
    base = base or TrainConfig()
    rows: list[SearchRow] = []

    curve = list(evaluate(replace(base, epochs=max(grid.epochs))))
    ep_acc = []
    for e in sorted(set(grid.epochs)):
        acc = float(curve[e - 1])
        ep_acc.append((e, acc))
        rows.append(SearchRow(1, e, base.hidden, base.dropout, acc))
    # Fewest epochs among equals.
    best_epochs = _top(ep_acc, 1, lambda e: e)[0]

    h_acc = []
    for h in sorted(set(grid.hidden)):
        acc = float(evaluate(replace(base, hidden=h))[-1])
        h_acc.append((h, acc))
        rows.append(SearchRow(1, base.epochs, h, base.dropout, acc))
    d_acc = []
    for p in sorted(set(grid.dropout)):
        acc = float(evaluate(replace(base, dropout=p))[-1])
        d_acc.append((p, acc))
        rows.append(SearchRow(1, base.epochs, base.hidden, p, acc))

    hiddens = _top(h_acc, top_k, lambda h: h)
    dropouts = _top(d_acc, top_k, lambda p: -p)
    stage2 = []
    for h in hiddens:
        for p in dropouts:
            acc = float(evaluate(replace(base, epochs=best_epochs, hidden=h, dropout=p))[-1])
            stage2.append(SearchRow(2, best_epochs, h, p, acc))
    rows.extend(stage2)
    best = select_best(stage2)
    return replace(base, epochs=best.epochs, hidden=best.hidden, dropout=best.dropout), rows


def write_report_csv(rows: Sequence[SearchRow], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["stage", "epochs", "hidden", "dropout", "accuracy"])
        for r in rows:
            w.writerow([r.stage, r.epochs, r.hidden, r.dropout, repr(float(r.accuracy))])


def accuracy_surface(rows: Sequence[SearchRow]) -> tuple[list[int], list[float], np.ndarray]:
    """Stage-2 accuracies as a (hidden x dropout) array, for plotting."""
    s2 = [r for r in rows if r.stage == 2]
    hs = sorted({r.hidden for r in s2})
    ps = sorted({r.dropout for r in s2})
    grid = np.full((len(hs), len(ps)), np.nan)
    for r in s2:
        grid[hs.index(r.hidden), ps.index(r.dropout)] = r.accuracy
    return hs, ps, grid
