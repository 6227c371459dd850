from lide.rnn.gru import (
    PAPER_CONFIG,
    GruModel,
    GruParams,
    TrainConfig,
    dropout_mask,
    gru_backward,
    gru_forward,
    gru_loss,
    train_gru,
    write_history_csv,
)
from lide.rnn.kernels import BACKEND
from lide.rnn.search import SearchGrid, SearchRow, corpus_evaluator, select_best, two_stage_search

__all__ = [
    "BACKEND",
    "PAPER_CONFIG",
    "GruModel",
    "GruParams",
    "SearchGrid",
    "SearchRow",
    "TrainConfig",
    "corpus_evaluator",
    "dropout_mask",
    "gru_backward",
    "gru_forward",
    "gru_loss",
    "select_best",
    "train_gru",
    "two_stage_search",
    "write_history_csv",
]
