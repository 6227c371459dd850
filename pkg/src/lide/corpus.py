"""DSL-format corpora, the language registry, splits and vocabulary overlap.

A DSL corpus file is UTF-8 text with one ``<sentence>\\t<label>`` record per
line. Labels that the registry does not know (the shared task's mixed
language noise set, for instance) are kept and flagged ``other``; they are
dropped by :meth:`Corpus.known` before training or evaluation.
"""
from __future__ import annotations

import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator, Sequence, TextIO, Union

import numpy as np

from lide.errors import DslFormatError, LideError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Language:
    code: str
    group: str
    display_name: str


@dataclass(frozen=True)
class LanguageGroup:
    name: str
    members: tuple[str, ...]
    # Tag a variety-blind detector emits for the whole group, if any.
    base_tag: str | None = None

    def __post_init__(self):
        if not self.members:
            raise ValueError(f"language group {self.name!r} has no members")


class Registry:
    """Ordered collection of language groups.

    Language order (group order, then member order) fixes the class order of
    every model and the row/column order of confusion matrices.
    """

    def __init__(self, groups: Iterable[LanguageGroup], names: dict[str, str] | None = None):
        self.groups: tuple[LanguageGroup, ...] = tuple(groups)
        names = names or {}
        self._languages: dict[str, Language] = {}
        for g in self.groups:
            for code in g.members:
                if code in self._languages:
                    raise ValueError(f"language code {code!r} appears in more than one group")
                self._languages[code] = Language(code, g.name, names.get(code, code))
        self._groups = {g.name: g for g in self.groups}

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(self._languages)

    @property
    def group_names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.groups)

    def __contains__(self, code: object) -> bool:
        return code in self._languages

    def __len__(self) -> int:
        return len(self._languages)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Registry):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return f"Registry({len(self)} languages, {len(self.groups)} groups)"

    def language(self, code: str) -> Language:
        try:
            return self._languages[code]
        except KeyError:
            raise LideError(f"unknown language code {code!r}") from None

    def group(self, name: str) -> LanguageGroup:
        try:
            return self._groups[name]
        except KeyError:
            raise LideError(f"unknown language group {name!r}") from None

    def group_of(self, code: str) -> LanguageGroup:
        return self._groups[self.language(code).group]

    def order(self, codes: Iterable[str]) -> tuple[str, ...]:
        """Sort ``codes`` into registry order; unknown codes go last, sorted."""
        codes = set(codes)
        known = [c for c in self._languages if c in codes]
        return tuple(known) + tuple(sorted(codes - set(known)))

    def to_dict(self) -> dict:
        return {
            "groups": [
                {
                    "name": g.name,
                    "base_tag": g.base_tag,
                    "members": [
                        {"code": c, "name": self._languages[c].display_name} for c in g.members
                    ],
                }
                for g in self.groups
            ]
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Registry":
        groups, names = [], {}
        for g in doc["groups"]:
            members = []
            for m in g["members"]:
                members.append(m["code"])
                names[m["code"]] = m["name"]
            groups.append(LanguageGroup(g["name"], tuple(members), g.get("base_tag")))
        return cls(groups, names)


_DSL2015 = [
    ("South Eastern Slavic", None, [("bg", "Bulgarian"), ("mk", "Macedonian")]),
    ("South Western Slavic", None, [("bs", "Bosnian"), ("hr", "Croatian"), ("sr", "Serbian")]),
    ("West-Slavic", None, [("cz", "Czech"), ("sk", "Slovak")]),
    ("Ibero-Romance (Spanish)", "es",
     [("es-ES", "Peninsular Spanish"), ("es-AR", "Argentinian Spanish")]),
    ("Ibero-Romance (Portuguese)", "pt",
     [("pt-BR", "Brazilian Portuguese"), ("pt-PT", "European Portuguese")]),
    ("Astronesian", None, [("id", "Indonesian"), ("my", "Malay")]),
]


def default_registry() -> Registry:
    """The 13 DSL 2015 languages in their 6 groups."""
    groups = [LanguageGroup(name, tuple(c for c, _ in langs), base) for name, base, langs in _DSL2015]
    names = {c: n for _, _, langs in _DSL2015 for c, n in langs}
    return Registry(groups, names)


@dataclass(frozen=True)
class LabeledSentence:
    text: str
    label: str
    # True when the registry in effect did not know the label.
    other: bool = False


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[LabeledSentence, ...]
    registry: Registry = field(default_factory=default_registry, compare=False)
    # Parse diagnostics; not part of corpus identity.
    blank_lines: int = field(default=0, compare=False)
    rejected: tuple[tuple[int, str], ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[LabeledSentence]:
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.sentences]

    def label_counts(self) -> Counter:
        return Counter(self.labels)

    def present_codes(self) -> tuple[str, ...]:
        """Known labels present in the corpus, in registry order."""
        return self.registry.order(s.label for s in self.sentences if not s.other)

    def subset(self, indices: Iterable[int]) -> "Corpus":
        return Corpus(tuple(self.sentences[i] for i in indices), self.registry)

    def known(self) -> "Corpus":
        """Drop sentences whose label is not in the registry."""
        return Corpus(tuple(s for s in self.sentences if not s.other), self.registry)

    def with_labels(self, codes: Iterable[str]) -> "Corpus":
        codes = set(codes)
        return Corpus(tuple(s for s in self.sentences if s.label in codes), self.registry)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], registry: Registry | None = None) -> "Corpus":
        registry = registry or default_registry()
        return cls(
            tuple(LabeledSentence(t, l, l not in registry) for t, l in pairs), registry
        )


Source = Union[str, bytes, TextIO, BinaryIO, Iterable[str]]


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DslFormatError(f"invalid UTF-8 at byte offset {e.start}") from None


def _lines(source: Source) -> Iterator[str]:
    # Records end at LF only; other Unicode line separators belong to the sentence.
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, (bytes, bytearray)):
        source = _decode(bytes(source))
    if isinstance(source, str):
        parts = source.split("\n")
        if parts[-1] == "":
            parts.pop()
        yield from parts
    else:
        for line in source:
            yield line[:-1] if line.endswith("\n") else line


def parse_dsl(
    source: Source,
    registry: Registry | None = None,
    label_first: bool = False,
    strict: bool = False,
) -> Corpus:
    """Parse DSL records into a :class:`Corpus`.

    ``source`` may be a str, bytes, a text or binary file object, or any
    iterable of lines. Blank lines are skipped and counted. A line without a
    tab is rejected: logged with its line number and kept in
    ``Corpus.rejected``, or raised as :class:`DslFormatError` when ``strict``.
    """
    registry = registry or default_registry()
    sentences = []
    blank = 0
    rejected = []
    for lineno, line in enumerate(_lines(source), start=1):
        if not line.strip():
            blank += 1
            continue
        if "\t" not in line:
            problem = "no tab separator"
        else:
            if label_first:
                label, text = line.split("\t", 1)
            else:
                text, label = line.rsplit("\t", 1)
            label = label.strip()
            if not label:
                problem = "empty label"
            elif not text.strip():
                problem = "empty sentence"
            else:
                sentences.append(LabeledSentence(text, label, label not in registry))
                continue
        if strict:
            raise DslFormatError(f"line {lineno}: {problem}")
        log.warning("line %d rejected: %s", lineno, problem)
        rejected.append((lineno, problem))
    if blank:
        log.warning("skipped %d blank line(s)", blank)
    return Corpus(tuple(sentences), registry, blank, tuple(rejected))


def read_dsl(path: str | os.PathLike, registry: Registry | None = None, **kwargs) -> Corpus:
    with open(path, "rb") as f:
        return parse_dsl(f.read(), registry, **kwargs)


def format_dsl(corpus: Corpus | Iterable[LabeledSentence], label_first: bool = False) -> str:
    out = []
    for s in corpus:
        out.append(f"{s.label}\t{s.text}\n" if label_first else f"{s.text}\t{s.label}\n")
    return "".join(out)


@dataclass(frozen=True)
class SplitSpec:
    fraction_train: float = 0.9
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.fraction_train < 1.0:
            raise ValueError(f"fraction_train must lie in (0, 1), got {self.fraction_train}")


def _take(n: int, fraction: float) -> int:
    return int(np.floor(n * fraction + 0.5))


def split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Deterministic two-way partition; file order is kept inside each part."""
    n = len(corpus)
    if n == 0:
        raise LideError("cannot split an empty corpus")
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        by_label: dict[str, list[int]] = {}
        for i, s in enumerate(corpus.sentences):
            by_label.setdefault(s.label, []).append(i)
        first: list[int] = []
        for label in sorted(by_label):
            idx = by_label[label]
            if len(idx) < 2:
                raise LideError(f"label {label!r} has fewer than 2 sentences; cannot stratify")
            k = min(max(_take(len(idx), spec.fraction_train), 1), len(idx) - 1)
            perm = rng.permutation(len(idx))
            first.extend(idx[j] for j in perm[:k])
    else:
        k = _take(n, spec.fraction_train)
        first = rng.permutation(n)[:k].tolist()
    chosen = np.zeros(n, dtype=bool)
    chosen[first] = True
    return (
        corpus.subset(np.flatnonzero(chosen).tolist()),
        corpus.subset(np.flatnonzero(~chosen).tolist()),
    )


def _word_types(corpus: Corpus, code: str) -> set[str]:
    types: set[str] = set()
    found = False
    for s in corpus.sentences:
        if s.label == code:
            found = True
            types.update(s.text.split())
    if not found:
        raise LideError(f"language {code!r} does not occur in the corpus")
    return types


def vocab_overlap(corpus: Corpus, source: str, target: str) -> float:
    """Share of ``source``'s distinct word types that also occur in ``target``."""
    src = _word_types(corpus, source)
    tgt = _word_types(corpus, target)
    if not src:
        return 0.0
    return len(src & tgt) / len(src)


def label_indices(labels: Sequence[str], classes: Sequence[str]) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    try:
        return np.array([index[l] for l in labels], dtype=np.int64)
    except KeyError as e:
        raise LideError(f"label {e.args[0]!r} is not one of the model classes") from None
