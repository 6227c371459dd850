"""Model files: one self-describing JSON document per model.

Arrays are stored as ``{"shape": [...], "data": [...]}`` with the data
flattened row-major. Python's float repr round-trips exactly, so a loaded
model predicts bit-for-bit like the saved one. An ensemble file is a
manifest that names its member files (relative to itself) and embeds the
meta-classifier.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from lide.base import TextClassifier
from lide.corpus import Registry, default_registry
from lide.ensemble import EnsembleModel
from lide.errors import ModelFormatError
from lide.features import NgramSpec, Vocabulary
from lide.linear import LogRegConfig, LogRegModel, MnbModel
from lide.rnn.gru import PARAM_NAMES, GruModel, GruParams, TrainConfig

FORMAT_VERSION = 1
MODEL_TYPES = ("mnb", "logreg", "gru", "ensemble")


@dataclass(eq=False)
class ModelFile:
    model: TextClassifier
    model_type: str
    registry: Registry
    format_version: int = FORMAT_VERSION


def _array(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": np.asarray(a, dtype=np.float64).ravel().tolist()}


def _nan_to_none(x):
    return None if x is None or (isinstance(x, float) and np.isnan(x)) else float(x)


def _history(history) -> list:
    return [[int(e), _nan_to_none(tr), _nan_to_none(va)] for e, tr, va in history]


def _logreg_doc(m: LogRegModel) -> dict:
    return {
        "classes": list(m.classes),
        "config": asdict(m.config),
        "parameters": {"W": _array(m.W), "b": _array(m.b)},
        "history": [[a if isinstance(a, int) else float(a), _nan_to_none(b), _nan_to_none(c)]
                    for a, b, c in m.history],
    }


def model_type_of(model) -> str:
    for cls, name in ((MnbModel, "mnb"), (LogRegModel, "logreg"), (GruModel, "gru"),
                      (EnsembleModel, "ensemble")):
        if isinstance(model, cls):
            return name
    raise TypeError(f"cannot persist {type(model).__name__}")


def model_document(model, registry: Registry | None = None, member_paths=None) -> dict:
    registry = registry or default_registry()
    kind = model_type_of(model)
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "model_type": kind,
        "registry": registry.to_dict(),
        "classes": list(model.classes),
    }
    if kind == "mnb":
        doc.update(
            feature_spec=str(model.spec),
            vocabulary=model.vocab.to_dict(),
            config={"alpha": model.alpha},
            parameters={"log_prior": _array(model.log_prior),
                        "log_likelihood": _array(model.log_likelihood)},
        )
    elif kind == "logreg":
        d = _logreg_doc(model)
        doc.update(feature_spec=str(model.spec), vocabulary=model.vocab.to_dict(),
                   config=d["config"], parameters=d["parameters"], history=d["history"])
    elif kind == "gru":
        doc.update(
            feature_spec=str(model.spec),
            vocabulary=model.vocab.to_dict(),
            config=model.config.to_dict(),
            parameters={k: _array(v) for k, v in model.params.arrays().items()},
            history=_history(model.history),
        )
    else:
        if member_paths is None or len(member_paths) != len(model.members):
            raise ValueError("an ensemble manifest needs one path per member")
        doc.update(
            members=[str(p) for p in member_paths],
            combiner=model.combiner,
            weights=None if model.weights is None else np.asarray(model.weights).tolist(),
            meta=None if model.meta is None else _logreg_doc(model.meta),
            cv_report=[[float(l), float(a)] for l, a in model.cv_report],
        )
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def save_model(model, path, registry: Registry | None = None, member_paths=None) -> None:
    """Write ``model`` to ``path``.

    Ensemble members are written beside the manifest as ``<name>.m<i>.model``
    unless ``member_paths`` names existing files for them.
    """
    path = Path(path)
    if isinstance(model, EnsembleModel) and member_paths is None:
        member_paths = []
        for i, m in enumerate(model.members):
            mp = path.with_name(f"{path.name}.m{i}.model")
            save_model(m, mp, registry)
            member_paths.append(mp.name)
    elif member_paths is not None:
        member_paths = [os.path.relpath(Path(p).resolve(), path.resolve().parent) for p in member_paths]
    path.write_text(dumps(model_document(model, registry, member_paths)), encoding="utf-8")


# ----------------------------------------------------------------------------
# Loading
# ----------------------------------------------------------------------------

class _Doc:
    """Field access that reports the dotted path of the first bad field."""

    def __init__(self, doc, path: str = ""):
        self.doc, self.path = doc, path

    def _p(self, key) -> str:
        return f"{self.path}.{key}" if self.path else str(key)

    def get(self, key, kind=None, optional: bool = False):
        if not isinstance(self.doc, dict):
            raise ModelFormatError(f"{self.path or '<root>'}: expected an object")
        if key not in self.doc or self.doc[key] is None:
            if optional:
                return None
            raise ModelFormatError(f"{self._p(key)}: missing")
        v = self.doc[key]
        if kind is not None and not isinstance(v, kind):
            raise ModelFormatError(f"{self._p(key)}: expected {getattr(kind, '__name__', kind)}")
        return v

    def sub(self, key, optional: bool = False) -> "_Doc | None":
        v = self.get(key, dict, optional)
        return None if v is None else _Doc(v, self._p(key))

    def array(self, key, shape=None) -> np.ndarray:
        d = self.sub(key)
        shp = d.get("shape", list)
        data = d.get("data", list)
        try:
            a = np.array(data, dtype=np.float64).reshape(shp)
        except (TypeError, ValueError):
            raise ModelFormatError(f"{self._p(key)}.data: does not hold {shp} numbers") from None
        if not np.all(np.isfinite(a)):
            raise ModelFormatError(f"{self._p(key)}.data: non-finite value")
        if shape is not None and a.shape != tuple(shape):
            raise ModelFormatError(f"{self._p(key)}: shape {list(a.shape)}, expected {list(shape)}")
        return a

    def build(self, key, factory):
        try:
            return factory(self.get(key))
        except ModelFormatError:
            raise
        except (TypeError, ValueError, KeyError, AttributeError) as e:
            raise ModelFormatError(f"{self._p(key)}: {e}") from None


def _config(d: _Doc, cls):
    def make(raw):
        names = {f.name for f in fields(cls)}
        extra = set(raw) - names
        if extra:
            raise ValueError(f"unknown fields {sorted(extra)}")
        return cls(**raw)
    return d.build("config", make)


def _load_logreg(d: _Doc, classes, spec=None, vocab=None) -> LogRegModel:
    C = len(classes)
    W = d.sub("parameters").array("W")
    if W.ndim != 2 or W.shape[0] != C:
        raise ModelFormatError(f"{d._p('parameters.W')}: expected {C} rows")
    if vocab is not None and W.shape[1] != len(vocab):
        raise ModelFormatError(f"{d._p('parameters.W')}: expected {len(vocab)} columns")
    b = d.sub("parameters").array("b", (C,))
    cfg = _config(d, LogRegConfig)
    hist = [tuple(h) for h in d.get("history", list, optional=True) or []]
    return LogRegModel(W, b, cfg, tuple(classes), spec, vocab, hist)


def read_document(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ModelFormatError(f"{path}: not UTF-8 ({e.reason})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path}: not valid JSON ({e.msg} at line {e.lineno})") from None


def load_model_file(path) -> ModelFile:
    path = Path(path)
    d = _Doc(read_document(path))
    version = d.get("format_version", int)
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"format_version: file has version {version}, this build reads version {FORMAT_VERSION}"
        )
    kind = d.get("model_type", str)
    if kind not in MODEL_TYPES:
        raise ModelFormatError(f"model_type: unknown type {kind!r}")
    registry = d.build("registry", Registry.from_dict)
    classes = tuple(d.get("classes", list))
    if not classes or not all(isinstance(c, str) for c in classes):
        raise ModelFormatError("classes: expected a non-empty list of strings")
    C = len(classes)

    if kind == "ensemble":
        members = []
        for i, rel in enumerate(d.get("members", list)):
            if not isinstance(rel, str):
                raise ModelFormatError(f"members.{i}: expected a path")
            members.append(load_model(path.parent / rel))
        combiner = d.get("combiner", str)
        meta_doc = d.sub("meta", optional=True)
        meta = _load_logreg(meta_doc, classes) if meta_doc is not None else None
        weights = d.get("weights", list, optional=True)
        cv = [tuple(x) for x in d.get("cv_report", list, optional=True) or []]
        try:
            model = EnsembleModel(members, combiner, meta,
                                  None if weights is None else np.array(weights, dtype=np.float64), cv)
        except Exception as e:
            raise ModelFormatError(f"members: {e}") from None
        if model.classes != classes:
            raise ModelFormatError("classes: do not match the member models")
        return ModelFile(model, kind, registry, version)

    spec = d.build("feature_spec", NgramSpec.parse)
    vocab = d.build("vocabulary", Vocabulary.from_dict)
    V = len(vocab)
    if kind == "mnb":
        p = d.sub("parameters")
        alpha = d.sub("config").get("alpha", (int, float))
        model = MnbModel(p.array("log_prior", (C,)), p.array("log_likelihood", (C, V)),
                         float(alpha), classes, spec, vocab)
    elif kind == "logreg":
        model = _load_logreg(d, classes, spec, vocab)
    else:
        cfg = d.build("config", TrainConfig.from_dict)
        p = d.sub("parameters")
        E = p.array("E")
        if E.ndim != 2 or E.shape[0] != V:
            raise ModelFormatError(f"parameters.E: expected {V} rows")
        dim, H = E.shape[1], cfg.hidden
        shapes = {"E": (V, dim), "Wz": (H, dim), "Uz": (H, H), "bz": (H,), "Wr": (H, dim),
                  "Ur": (H, H), "br": (H,), "Wc": (H, dim), "Uc": (H, H), "bc": (H,),
                  "Wo": (C, H), "bo": (C,)}
        params = GruParams(**{k: p.array(k, shapes[k]) for k in PARAM_NAMES})
        hist = [
            (int(e), float("nan") if tr is None else tr, float("nan") if va is None else va)
            for e, tr, va in d.get("history", list, optional=True) or []
        ]
        model = GruModel(params, cfg, spec, vocab, classes, hist)
    return ModelFile(model, kind, registry, version)


def load_model(path) -> TextClassifier:
    return load_model_file(path).model

