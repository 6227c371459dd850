"""Small generated corpora with known structure, for tests and demos."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from lide.corpus import Corpus, LabeledSentence, Registry, default_registry

CYRILLIC = "абвгдежзиклмнопрстуфхцчшщ"
LATIN_A = "abcdefghijklm"
LATIN_B = "nopqrstuvwxyz"
GREEK = "αβγδεζηθικλμνξοπρστυφχψω"
LATIN = LATIN_A + LATIN_B


def _lexicon(rng: np.random.Generator, alphabet: str, size: int, lengths=(2, 8)) -> list[str]:
    words: set[str] = set()
    while len(words) < size:
        n = int(rng.integers(lengths[0], lengths[1] + 1))
        words.add("".join(rng.choice(list(alphabet), size=n)))
    return sorted(words)


def _zipf(size: int) -> np.ndarray:
    w = 1.0 / np.arange(1, size + 1)
    return w / w.sum()


def _sentence(rng: np.random.Generator, lexicon: Sequence[str], n_words: int) -> str:
    idx = rng.choice(len(lexicon), size=n_words, p=_zipf(len(lexicon)))
    return " ".join(lexicon[i] for i in idx)


def disjoint_corpus(n_per_class: int = 300, codes: Sequence[str] = ("bg", "cz", "es-ES"),
                    alphabets: Sequence[str] = (CYRILLIC, LATIN_A, LATIN_B), seed: int = 0,
                    lexicon_size: int = 150, words=(4, 10),
                    registry: Registry | None = None) -> Corpus:
    """One language per alphabet; sentences are Zipf-sampled from a per-language lexicon.

    Sentences are interleaved by class (0, 1, 2, 0, 1, 2, ...).
    """
    if len(codes) != len(alphabets):
        raise ValueError("need one alphabet per language code")
    rng = np.random.default_rng(seed)
    lexicons = [_lexicon(rng, a, lexicon_size) for a in alphabets]
    out = []
    for _ in range(n_per_class):
        for code, lex in zip(codes, lexicons):
            n = int(rng.integers(words[0], words[1] + 1))
            out.append(LabeledSentence(_sentence(rng, lex, n), code))
    return Corpus(tuple(out), registry or default_registry())


def similar_pair_corpus(n_per_class: int = 300, pair: Sequence[str] = ("bs", "hr"),
                        distinct: str = "cz", seed: int = 0, shared_size: int = 200,
                        unique_size: int = 40, unique_rate: float = 0.08, words=(4, 10),
                        registry: Registry | None = None) -> Corpus:
    """Two languages drawing mostly from one shared lexicon, plus a third apart.

    Each word of a pair sentence comes from the language's own small lexicon
    with probability ``unique_rate`` and from the shared lexicon otherwise, so
    many pair sentences carry no distinguishing word at all.
    """
    rng = np.random.default_rng(seed)
    pool = _lexicon(rng, LATIN, shared_size + 2 * unique_size + 200)
    order = rng.permutation(len(pool))
    shared = [pool[i] for i in order[:shared_size]]
    own = {
        pair[0]: [pool[i] for i in order[shared_size:shared_size + unique_size]],
        pair[1]: [pool[i] for i in order[shared_size + unique_size:shared_size + 2 * unique_size]],
    }
    other_lex = [pool[i] for i in order[shared_size + 2 * unique_size:]]
    out = []
    for _ in range(n_per_class):
        for code in pair:
            n = int(rng.integers(words[0], words[1] + 1))
            ws = []
            for _ in range(n):
                lex = own[code] if rng.random() < unique_rate else shared
                ws.append(lex[int(rng.integers(len(lex)))])
            out.append(LabeledSentence(" ".join(ws), code))
        n = int(rng.integers(words[0], words[1] + 1))
        out.append(LabeledSentence(_sentence(rng, other_lex, n), distinct))
    return Corpus(tuple(out), registry or default_registry())
