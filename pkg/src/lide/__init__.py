"""Language identification from short text.

Character/word n-gram features, multinomial Naive Bayes, L2-regularised
softmax regression, GRU sequence classifiers and a stacked GRU ensemble,
plus evaluation and failure-diagnosis tools.
"""
from lide.corpus import (
    Corpus,
    LabeledSentence,
    Language,
    LanguageGroup,
    Registry,
    SplitSpec,
    default_registry,
    parse_dsl,
    read_dsl,
    split,
    vocab_overlap,
)
from lide.errors import DslFormatError, LideError, ModelFormatError, TrainingError
from lide.features import NgramSpec, Vocabulary, build_vocab

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "DslFormatError",
    "LabeledSentence",
    "Language",
    "LanguageGroup",
    "LideError",
    "ModelFormatError",
    "NgramSpec",
    "Registry",
    "SplitSpec",
    "TrainingError",
    "Vocabulary",
    "build_vocab",
    "default_registry",
    "parse_dsl",
    "read_dsl",
    "split",
    "vocab_overlap",
]
