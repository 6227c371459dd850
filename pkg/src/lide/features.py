"""Tokenisation, n-gram extraction, vocabularies and count vectors.

Characters are Unicode scalar values; a word is a maximal run of
non-whitespace characters. Nothing is case-folded or otherwise normalised.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from lide.errors import LideError

_WS_RUN = re.compile(r"\s+")
_WORD = re.compile(r"\S+")

CHAR, WORD = "char", "word"
RESTRICTED, SPANNING = "restricted", "spanning"


@dataclass(frozen=True)
class NgramSpec:
    unit: str = CHAR
    n_min: int = 1
    n_max: int = 1
    boundary: str = RESTRICTED

    def __post_init__(self):
        if self.unit not in (CHAR, WORD):
            raise ValueError(f"unit must be 'char' or 'word', got {self.unit!r}")
        if self.boundary not in (RESTRICTED, SPANNING):
            raise ValueError(f"boundary must be 'restricted' or 'spanning', got {self.boundary!r}")
        if self.unit == WORD and self.boundary != RESTRICTED:
            raise ValueError("word n-grams are always restricted")
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError(f"need 1 <= n_min <= n_max, got {self.n_min}..{self.n_max}")

    @classmethod
    def parse(cls, text: str) -> "NgramSpec":
        """Parse ``unit:min-max[:mode]``, e.g. ``char:2-2:spanning`` or ``word:1-1``.

        A single order (``char:3``) is accepted as ``char:3-3``.
        """
        parts = text.strip().split(":")
        if not 2 <= len(parts) <= 3:
            raise ValueError(f"bad n-gram spec {text!r}; expected unit:min-max[:mode]")
        unit, rng = parts[0], parts[1]
        boundary = parts[2] if len(parts) == 3 else RESTRICTED
        lo, _, hi = rng.partition("-")
        try:
            n_min = int(lo)
            n_max = int(hi) if hi else n_min
        except ValueError:
            raise ValueError(f"bad n-gram range {rng!r} in {text!r}") from None
        return cls(unit, n_min, n_max, boundary)

    def __str__(self) -> str:
        s = f"{self.unit}:{self.n_min}-{self.n_max}"
        return s if self.unit == WORD else f"{s}:{self.boundary}"

    @property
    def single_order(self) -> bool:
        return self.n_min == self.n_max


def word_tokens(text: str) -> list[str]:
    return text.split()


def word_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) offsets of each word in ``text``."""
    return [m.span() for m in _WORD.finditer(text)]


def collapse_whitespace(text: str) -> str:
    """Strip, then replace every whitespace run with one ASCII space."""
    return _WS_RUN.sub(" ", text).strip()


def char_ngrams(text: str, n: int, boundary: str = RESTRICTED) -> list[str]:
    if n < 1:
        raise ValueError("n must be >= 1")
    if boundary == RESTRICTED:
        out = []
        for w in text.split():
            out.extend(w[i:i + n] for i in range(len(w) - n + 1))
        return out
    if boundary == SPANNING:
        t = collapse_whitespace(text)
        return [t[i:i + n] for i in range(len(t) - n + 1)]
    raise ValueError(f"unknown boundary mode {boundary!r}")


def word_ngrams(text: str, n: int) -> list[str]:
    words = text.split()
    return [" ".join(words[i:i + n]) for i in range(len(words) - n + 1)]


def ngrams_up_to(text: str, spec: NgramSpec) -> list[str]:
    """All n-grams for orders ``spec.n_min..spec.n_max``, each tagged with its order.

    Char n-grams are tagged ``"<m>:"`` and word n-grams ``"w<m>:"``.
    """
    out: list[str] = []
    for m in range(spec.n_min, spec.n_max + 1):
        if spec.unit == CHAR:
            tag = f"{m}:"
            grams = char_ngrams(text, m, spec.boundary)
        else:
            tag = f"w{m}:"
            grams = word_ngrams(text, m)
        out.extend(tag + g for g in grams)
    return out


class Vocabulary:
    """Token to index map. Index 0 is reserved for out-of-vocabulary tokens."""

    OOV = "<oov>"

    def __init__(self, tokens: Sequence[str], freqs: Sequence[int], min_count: int = 1,
                 max_size: int | None = None):
        if len(tokens) != len(freqs):
            raise ValueError("tokens and freqs differ in length")
        self.itos: tuple[str, ...] = (self.OOV, *tokens)
        self.freqs: tuple[int, ...] = (0, *(int(f) for f in freqs))
        self.min_count = min_count
        self.max_size = max_size
        # The sentinel is never looked up by name, so a literal "<oov>" token is safe.
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(tokens, start=1)}
        if len(self.stoi) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)}, min_count={self.min_count})"

    def index(self, token: str) -> int:
        return self.stoi.get(token, 0)

    def to_dict(self) -> dict:
        return {
            "tokens": list(self.itos[1:]),
            "freqs": list(self.freqs[1:]),
            "min_count": self.min_count,
            "max_size": self.max_size,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Vocabulary":
        return cls(doc["tokens"], doc["freqs"], doc["min_count"], doc["max_size"])


def build_vocab(streams: Iterable[Iterable[str]], min_count: int = 1,
                max_size: int | None = None) -> Vocabulary:
    """Count tokens over ``streams`` (one iterable of tokens per document).

    Keeps tokens seen at least ``min_count`` times, most frequent first with
    ties in lexicographic order, and truncates so the vocabulary including the
    OOV slot has at most ``max_size`` entries.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if max_size is not None and max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts: Counter = Counter()
    for tokens in streams:
        counts.update(tokens)
    kept = sorted(((t, c) for t, c in counts.items() if c >= min_count), key=lambda tc: (-tc[1], tc[0]))
    if max_size is not None:
        kept = kept[:max_size - 1]
    return Vocabulary([t for t, _ in kept], [c for _, c in kept], min_count, max_size)


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    counts: np.ndarray

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.indices.tolist(), self.counts.tolist()))

    def __len__(self) -> int:
        return len(self.indices)

    def total(self) -> int:
        return int(self.counts.sum())

    def to_row(self, size: int) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.counts.astype(np.float64), self.indices, np.array([0, len(self.indices)])),
            shape=(1, size),
        )


def vectorize_counts(tokens: Iterable[str], vocab: Vocabulary) -> SparseVector:
    ids = np.fromiter((vocab.stoi.get(t, 0) for t in tokens), dtype=np.int64)
    idx, counts = np.unique(ids, return_counts=True)
    return SparseVector(idx, counts.astype(np.int64))


def count_matrix(texts: Sequence[str], spec: NgramSpec, vocab: Vocabulary) -> sp.csr_matrix:
    """Stack the count vectors of ``texts`` into a CSR matrix of shape (n, |vocab|)."""
    indptr = [0]
    indices: list[np.ndarray] = []
    data: list[np.ndarray] = []
    for text in texts:
        v = vectorize_counts(ngrams_up_to(text, spec), vocab)
        indices.append(v.indices)
        data.append(v.counts)
        indptr.append(indptr[-1] + len(v))
    return sp.csr_matrix(
        (
            np.concatenate(data).astype(np.float64) if data else np.zeros(0),
            np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
            np.asarray(indptr, dtype=np.int64),
        ),
        shape=(len(texts), len(vocab)),
    )


DEFAULT_MAX_LEN = 256


def encode_sequence(tokens: Sequence[str], vocab: Vocabulary, max_len: int = DEFAULT_MAX_LEN) -> np.ndarray:
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if not tokens:
        raise LideError("cannot encode an empty token sequence")
    return np.fromiter((vocab.stoi.get(t, 0) for t in tokens[:max_len]), dtype=np.int64)


def format_sparse_row(label: str, v: SparseVector) -> str:
    """``label idx:count idx:count ...`` as written by ``export-vectors``."""
    return " ".join([label, *(f"{i}:{c}" for i, c in v.pairs())])
