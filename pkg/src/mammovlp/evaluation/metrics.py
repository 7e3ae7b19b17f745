"""Class-wise F1 and macro-averaged F1, plus the per-fold report record."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError


def _check_labels(predictions, truths, k: int):
    preds = np.asarray(predictions, dtype=np.int64)
    trues = np.asarray(truths, dtype=np.int64)
    if preds.shape != trues.shape or preds.ndim != 1:
        raise ContractError(
            f"predictions and truths must be equal-length 1-d, got {preds.shape} vs {trues.shape}"
        )
    if preds.size and (preds.min() < 0 or preds.max() >= k or trues.min() < 0 or trues.max() >= k):
        raise ContractError(f"class indices must lie in [0, {k})")
    return preds, trues


def f1_scores(predictions, truths, k: int) -> np.ndarray:
    """Per-class F1 = 2 TP / (2 TP + FP + FN).

    A class that never occurs in either predictions or truths has an
    undefined F1; it scores 0 by convention (callers flag it via
    :func:`zero_support_classes`).
    """
    preds, trues = _check_labels(predictions, truths, k)
    scores = np.zeros(k, dtype=np.float64)
    for c in range(k):
        tp = int(np.sum((preds == c) & (trues == c)))
        fp = int(np.sum((preds == c) & (trues != c)))
        fn = int(np.sum((preds != c) & (trues == c)))
        denom = 2 * tp + fp + fn
        scores[c] = (2.0 * tp / denom) if denom else 0.0
    return scores


def zero_support_classes(predictions, truths, k: int) -> list[int]:
    """Classes with TP + FP + FN = 0, i.e. absent from both arrays."""
    preds, trues = _check_labels(predictions, truths, k)
    return [c for c in range(k) if not np.any(preds == c) and not np.any(trues == c)]


def macro_f1(per_class) -> float:
    """Unweighted arithmetic mean of per-class F1 scores."""
    vec = np.asarray(per_class, dtype=np.float64)
    if vec.size == 0:
        raise ContractError("macro F1 of an empty score vector is undefined")
    return float(vec.mean())


def fold_std(values) -> float:
    """Population standard deviation over a fixed set of fold scores."""
    return float(np.std(np.asarray(values, dtype=np.float64), ddof=0))


@dataclass
class MetricReport:
    """Scores for one evaluation cell (one fold, arm, budget, scheme)."""

    per_class_f1: list[float]
    macro_f1: float
    support: list[int]
    scheme: str
    fold_index: int | None = None
    budget: int | str | None = None
    arm: str | None = None
    zero_support: list[int] = field(default_factory=list)

    @classmethod
    def from_predictions(cls, predictions, truths, k: int, scheme: str,
                         fold_index: int | None = None,
                         budget: int | str | None = None,
                         arm: str | None = None) -> "MetricReport":
        preds, trues = _check_labels(predictions, truths, k)
        per_class = f1_scores(preds, trues, k)
        support = [int(np.sum(trues == c)) for c in range(k)]
        return cls(
            per_class_f1=[float(x) for x in per_class],
            macro_f1=macro_f1(per_class),
            support=support,
            scheme=scheme,
            fold_index=fold_index,
            budget=budget,
            arm=arm,
            zero_support=zero_support_classes(preds, trues, k),
        )

    def to_dict(self) -> dict:
        return {
            "per_class_f1": self.per_class_f1,
            "macro_f1": self.macro_f1,
            "support": self.support,
            "scheme": self.scheme,
            "fold_index": self.fold_index,
            "budget": self.budget,
            "arm": self.arm,
            "zero_support": self.zero_support,
        }


def summarize_folds(reports: list[MetricReport]) -> dict:
    """Mean and population std of macro F1 across fold reports."""
    if not reports:
        raise ContractError("cannot summarize an empty list of fold reports")
    scores = [r.macro_f1 for r in reports]
    return {
        "arm": reports[0].arm,
        "budget": reports[0].budget,
        "scheme": reports[0].scheme,
        "folds": len(reports),
        "fold_macro_f1": scores,
        "mean_macro_f1": float(np.mean(scores)),
        "std_macro_f1": fold_std(scores),
    }
