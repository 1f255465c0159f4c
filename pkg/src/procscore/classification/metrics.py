from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from procscore.classification.labels import ACTIVITIES
from procscore.errors import LengthMismatch


@dataclass(frozen=True)
class ClassifierMetrics:
    accuracy: float
    kappa: float
    confusion: np.ndarray  # rows = truth, columns = prediction
    labels: tuple

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "kappa": self.kappa,
            "labels": [getattr(lab, "value", lab) for lab in self.labels],
            "confusion": self.confusion.astype(int).tolist(),
        }


def cohen_kappa(confusion: np.ndarray) -> float:
    """(p_o - p_e) / (1 - p_e) with chance agreement from the marginal products."""
    confusion = np.asarray(confusion, dtype=float)
    total = confusion.sum()
    p_o = np.trace(confusion) / total
    p_e = float(np.dot(confusion.sum(axis=1), confusion.sum(axis=0))) / total**2
    if p_e >= 1.0:
        return 1.0 if p_o >= 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def evaluate(predictions: Sequence, truths: Sequence, labels: Sequence = ACTIVITIES) -> ClassifierMetrics:
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truths)} truths")
    if len(truths) == 0:
        raise LengthMismatch("need at least one prediction")
    index = {lab: i for i, lab in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=int)
    for p, t in zip(predictions, truths):
        confusion[index[t], index[p]] += 1
    accuracy = float(np.trace(confusion) / confusion.sum())
    return ClassifierMetrics(accuracy, cohen_kappa(confusion), confusion, tuple(labels))
