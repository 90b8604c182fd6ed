"""F1 scoring.  All scores live on a 0..100 scale.

Macro-F1 for the binary probes averages the F1 of the positive and the
negative class; a class with zero precision and recall contributes 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import LengthMismatch


@dataclass
class Metrics:
    precision_pos: float
    recall_pos: float
    f1_pos: float
    precision_neg: float
    recall_neg: float
    f1_neg: float
    macro_f1: float
    n_examples: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return 100.0 * precision, 100.0 * recall, 100.0 * f1


def macro_f1(preds, labels) -> Metrics:
    preds = np.asarray(preds).astype(np.int64).ravel()
    labels = np.asarray(labels).astype(np.int64).ravel()
    if preds.shape[0] != labels.shape[0]:
        raise LengthMismatch(f"{preds.shape[0]} predictions vs {labels.shape[0]} labels")
    if preds.shape[0] == 0:
        raise LengthMismatch("cannot score zero examples")
    tp = int(np.sum((preds == 1) & (labels == 1)))
    fp = int(np.sum((preds == 1) & (labels == 0)))
    fn = int(np.sum((preds == 0) & (labels == 1)))
    tn = int(np.sum((preds == 0) & (labels == 0)))
    p_pos, r_pos, f_pos = _prf(tp, fp, fn)
    p_neg, r_neg, f_neg = _prf(tn, fn, fp)
    return Metrics(
        precision_pos=p_pos,
        recall_pos=r_pos,
        f1_pos=f_pos,
        precision_neg=p_neg,
        recall_neg=r_neg,
        f1_neg=f_neg,
        macro_f1=(f_pos + f_neg) / 2.0,
        n_examples=int(preds.shape[0]),
    )


def multiclass_f1(preds, labels, n_classes: int) -> dict[str, float]:
    """Macro and support-weighted F1 over n_classes labels, 0..100."""
    preds = np.asarray(preds).astype(np.int64).ravel()
    labels = np.asarray(labels).astype(np.int64).ravel()
    if preds.shape[0] != labels.shape[0]:
        raise LengthMismatch(f"{preds.shape[0]} predictions vs {labels.shape[0]} labels")
    if preds.shape[0] == 0:
        raise LengthMismatch("cannot score zero examples")
    f1s = np.zeros(n_classes)
    support = np.zeros(n_classes)
    for c in range(n_classes):
        tp = int(np.sum((preds == c) & (labels == c)))
        fp = int(np.sum((preds == c) & (labels != c)))
        fn = int(np.sum((preds != c) & (labels == c)))
        _, _, f1s[c] = _prf(tp, fp, fn)
        support[c] = tp + fn
    weighted = float(np.sum(f1s * support) / support.sum()) if support.sum() else 0.0
    return {
        "macro_f1": float(f1s.mean()),
        "weighted_f1": weighted,
        "per_class_f1": [float(x) for x in f1s],
    }
