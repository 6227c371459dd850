"""Behaviour shared by every trained text classifier."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import log_softmax


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits, axis=-1))


class TextClassifier:
    """Mixin: subclasses set ``classes`` and implement :meth:`proba`."""

    classes: tuple[str, ...]

    def proba(self, texts: Sequence[str]) -> np.ndarray:
        raise NotImplementedError

    def predict(self, texts: Sequence[str]) -> list[str]:
        if not len(texts):
            return []
        # argmax returns the first maximum, i.e. the lowest class index on ties.
        return [self.classes[i] for i in np.argmax(self.proba(texts), axis=1)]

    def predict_one(self, text: str) -> tuple[str, np.ndarray]:
        p = self.proba([text])[0]
        return self.classes[int(np.argmax(p))], p
