"""Scoring third-party language detectors against a gold DSL corpus.

Two leniencies apply. Gold languages a detector does not support can be
excluded from the denominator. For groups marked variety-insensitive, a
prediction equal to the group's base tag ("es", "pt") counts as correct for
every member variety.

Adapters are either a subprocess (one sentence per stdin line in, one tag
per stdout line out) or an HTTP endpoint answering ``POST {"text": ...}``
with ``{"lang": ...}``.
"""
from __future__ import annotations

import json
import logging
import shlex
import subprocess
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from lide.corpus import Corpus, Registry
from lide.errors import LideError
from lide.evaluation import ConfusionMatrix, confusion

log = logging.getLogger(__name__)

MISSING = "und"
OTHER = "other"


@dataclass(frozen=True)
class SupportPolicy:
    unsupported: frozenset[str] = frozenset()
    variety_insensitive_groups: frozenset[str] = frozenset()
    # Extra or overriding group -> base tag mappings.
    base_tags: tuple[tuple[str, str], ...] = ()

    def resolve(self, registry: Registry) -> dict[str, str]:
        """Validate against ``registry``; return group -> base tag for lenient groups."""
        for code in self.unsupported:
            registry.language(code)
        overrides = dict(self.base_tags)
        tags = {}
        for name in self.variety_insensitive_groups:
            group = registry.group(name)
            tag = overrides.get(name, group.base_tag)
            if not tag:
                raise LideError(f"group {name!r} has no base tag; add one under base_tags")
            tags[name] = tag
        return tags

    @classmethod
    def from_json(cls, text: str) -> "SupportPolicy":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise LideError(f"policy file is not valid JSON: {e}") from None
        if not isinstance(doc, dict):
            raise LideError("policy file must hold a JSON object")
        unknown = set(doc) - {"unsupported", "variety_insensitive_groups", "base_tags"}
        if unknown:
            raise LideError(f"unknown policy keys: {sorted(unknown)}")
        return cls(
            frozenset(doc.get("unsupported", [])),
            frozenset(doc.get("variety_insensitive_groups", [])),
            tuple(sorted(doc.get("base_tags", {}).items())),
        )


@dataclass(frozen=True)
class ExternalPrediction:
    index: int
    tag: str | None
    confidence: float | None = None


@dataclass(eq=False)
class BenchResult:
    accuracy: float
    confusion: ConfusionMatrix
    skipped: int
    scored: int


def _as_tags(predictions, n: int) -> list[str | None]:
    tags: list[str | None] = [None] * n
    for i, p in enumerate(predictions):
        if isinstance(p, ExternalPrediction):
            if not 0 <= p.index < n:
                raise LideError(f"prediction index {p.index} outside corpus of {n}")
            tags[p.index] = p.tag
        else:
            if i >= n:
                raise LideError(f"more predictions than the {n} gold sentences")
            tags[i] = p
    return tags


def score_external(predictions: Sequence, gold: Corpus, policy: SupportPolicy | None = None) -> BenchResult:
    """Accuracy of external ``predictions`` on ``gold`` under ``policy``.

    ``predictions`` holds either :class:`ExternalPrediction` objects or one tag
    (or ``None``) per sentence. Missing predictions count as errors. In the
    confusion matrix, accepted base-tag predictions are credited to the gold
    label and unmatched tags fall into an ``other`` column.
    """
    policy = policy or SupportPolicy()
    registry = gold.registry
    base_tags = policy.resolve(registry)
    gold = gold.known()
    tags = _as_tags(predictions, len(gold))
    labels = (*registry.codes, OTHER)
    golds, preds = [], []
    skipped = 0
    for s, tag in zip(gold.sentences, tags):
        if s.label in policy.unsupported:
            skipped += 1
            continue
        tag = tag.strip() if tag else None
        group = registry.language(s.label).group
        if tag == s.label or (group in base_tags and tag == base_tags[group]):
            pred = s.label
        elif tag in registry:
            pred = tag
        else:
            pred = OTHER
        golds.append(s.label)
        preds.append(pred)
    cm = confusion(preds, golds, registry, labels=labels)
    acc = cm.accuracy() if golds else 0.0
    return BenchResult(acc, cm, skipped, len(golds))


# ----------------------------------------------------------------------------
# Adapters
# ----------------------------------------------------------------------------

class AdapterProtocolError(LideError):
    pass


@dataclass(frozen=True)
class AdapterSpec:
    command: tuple[str, ...] | None = None
    url: str | None = None
    attempts: int = 3
    backoff: float = 0.5
    timeout: float = 60.0
    parallelism: int = 4

    def __post_init__(self):
        if (self.command is None) == (self.url is None):
            raise ValueError("give exactly one of command or url")

    @classmethod
    def subprocess(cls, command: str | Sequence[str], **kw) -> "AdapterSpec":
        cmd = shlex.split(command) if isinstance(command, str) else tuple(command)
        return cls(command=tuple(cmd), **kw)


def _check_tag(tag: str, where: str) -> str | None:
    tag = tag.strip()
    if not tag:
        return None
    if any(ch.isspace() for ch in tag):
        raise AdapterProtocolError(f"{where}: tag {tag!r} contains whitespace")
    return tag


def _run_subprocess(spec: AdapterSpec, texts: list[str]) -> list[str | None]:
    payload = "".join(t.replace("\n", " ") + "\n" for t in texts)
    for attempt in range(1, spec.attempts + 1):
        try:
            proc = subprocess.run(
                spec.command, input=payload, capture_output=True, text=True,
                encoding="utf-8", timeout=spec.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as e:
            err = str(e)
        else:
            if proc.returncode == 0:
                break
            err = f"exit status {proc.returncode}: {proc.stderr.strip()[:200]}"
        log.warning("adapter attempt %d/%d failed: %s", attempt, spec.attempts, err)
        if attempt == spec.attempts:
            return [None] * len(texts)
        time.sleep(spec.backoff * 2 ** (attempt - 1))
    lines = proc.stdout.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) > len(texts):
        raise AdapterProtocolError(
            f"adapter output line {len(texts) + 1}: {lines[len(texts)]!r} has no matching input"
        )
    out = [_check_tag(line, f"adapter output line {i}") for i, line in enumerate(lines, start=1)]
    if len(out) < len(texts):
        log.warning("adapter returned %d of %d lines; rest counted as missing", len(out), len(texts))
    return out + [None] * (len(texts) - len(out))


def _post_one(spec: AdapterSpec, text: str, i: int) -> str | None:
    body = json.dumps({"text": text}).encode("utf-8")
    for attempt in range(1, spec.attempts + 1):
        req = urllib.request.Request(spec.url, data=body, headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=spec.timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as e:
            if e.code < 500:
                log.warning("sentence %d: HTTP %d, giving up", i, e.code)
                return None
            err = f"HTTP {e.code}"
        except (urllib.error.URLError, OSError) as e:
            err = str(e)
        else:
            try:
                doc = json.loads(raw)
                tag = doc["lang"]
            except (ValueError, KeyError, TypeError):
                raise AdapterProtocolError(f"sentence {i}: bad response {raw[:200]!r}") from None
            if tag is None:
                return None
            if not isinstance(tag, str):
                raise AdapterProtocolError(f"sentence {i}: 'lang' is not a string: {tag!r}")
            return _check_tag(tag, f"sentence {i}")
        log.warning("sentence %d attempt %d/%d failed: %s", i, attempt, spec.attempts, err)
        if attempt < spec.attempts:
            time.sleep(spec.backoff * 2 ** (attempt - 1))
    return None


def run_adapter(spec: AdapterSpec, corpus: Corpus) -> list[ExternalPrediction]:
    """Query the adapter for every sentence; failures become missing predictions."""
    texts = corpus.texts
    if spec.command is not None:
        tags = _run_subprocess(spec, texts)
    else:
        with ThreadPoolExecutor(max_workers=max(1, spec.parallelism)) as pool:
            tags = list(pool.map(lambda it: _post_one(spec, it[1], it[0]), enumerate(texts)))
    return [ExternalPrediction(i, t) for i, t in enumerate(tags)]


def read_predictions(f) -> list[str | None]:
    """One tag per line; blank lines are missing predictions."""
    lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [_check_tag(line, f"line {i}") for i, line in enumerate(lines, start=1)]


# Published comparison on the DSL 2015 test file; kept for report formatting.
REFERENCE_RESULTS = (
    ("LIDE", 0.95),
    ("Google Translate API", 0.89),
    ("Rosette Language API", 0.86),
    ("langid.py", 0.80),
    ("Yandex Translator API", 0.79),
)


def format_report(rows: Sequence[tuple[str, float]]) -> str:
    """Plain-text table sorted by non-increasing accuracy."""
    rows = sorted(rows, key=lambda r: -r[1])
    width = max([len("Solution"), *(len(name) for name, _ in rows)])
    out = [f"{'Solution':<{width}}  Accuracy", f"{'-' * width}  --------"]
    out += [f"{name:<{width}}  {acc * 100:7.2f}%" for name, acc in rows]
    return "\n".join(out) + "\n"
