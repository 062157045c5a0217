"""Point and set-valued evaluation metrics.

Point metrics (accuracy, macro-F1, quadratic-weighted kappa) work on argmax
predictions. Set metrics (coverage, average set size, singleton rate) work on
conformal prediction sets, and UAcc combines the two:
``accuracy * sqrt(K / avg_set_size)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .conformal import ConformalModel, PredictionSet, predict_batch
from .dataset import RecordSet
from .errors import MetricError, ValidationError

__all__ = [
    "EvalReport",
    "point_prediction",
    "point_predictions",
    "confusion_matrix",
    "accuracy",
    "macro_f1",
    "qwk",
    "coverage",
    "avg_set_size",
    "singleton_rate",
    "uacc",
    "evaluate",
    "format_table",
]


def point_prediction(probs) -> int:
    """Argmax label; ties go to the lowest index."""
    return int(np.argmax(np.asarray(probs, dtype=np.float64)))


def point_predictions(probs) -> np.ndarray:
    return np.asarray(probs, dtype=np.float64).argmax(axis=1)


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    truth = np.asarray(truth, dtype=np.int64).reshape(-1)
    if pred.shape != truth.shape:
        raise MetricError(f"length mismatch: {pred.size} predictions vs {truth.size} labels")
    if pred.size == 0:
        raise MetricError("metric undefined on empty input")
    return pred, truth


def confusion_matrix(pred, truth, K: int) -> np.ndarray:
    """``K x K`` counts indexed ``[true, predicted]``."""
    pred, truth = _pair(pred, truth)
    for name, arr in (("prediction", pred), ("label", truth)):
        if arr.min() < 0 or arr.max() >= K:
            raise MetricError(f"{name} index out of range for K={K}")
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (truth, pred), 1)
    return cm


def accuracy(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(pred == truth))


def macro_f1(pred, truth, K: int) -> float:
    """Unweighted mean of per-class F1 over all ``K`` classes.

    A class with no true and no predicted instances scores 0.
    """
    cm = confusion_matrix(pred, truth, K)
    tp = np.diag(cm).astype(np.float64)
    denom = cm.sum(axis=0) + cm.sum(axis=1)  # 2TP + FP + FN
    if not denom.any():
        raise MetricError("no class has any support")
    f1 = np.divide(2 * tp, denom, out=np.zeros(K), where=denom > 0)
    return float(f1.mean())


def qwk(pred, truth, K: int) -> float:
    """Quadratic-weighted Cohen's kappa.

    When the expected disagreement is zero (both raters constant on the same
    label) the sequences are identical and 1.0 is returned.
    """
    if K < 2:
        raise MetricError("QWK needs K >= 2")
    pred, truth = _pair(pred, truth)
    observed = confusion_matrix(pred, truth, K) / pred.size
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0))
    i, j = np.indices((K, K))
    weights = (i - j) ** 2 / (K - 1) ** 2
    expected_disagreement = float((weights * expected).sum())
    if expected_disagreement == 0.0:
        if np.array_equal(pred, truth):
            return 1.0
        raise MetricError("QWK undefined: expected disagreement is zero")
    return 1.0 - float((weights * observed).sum()) / expected_disagreement


def _sizes(sets) -> np.ndarray:
    sizes = np.array([len(s) for s in sets], dtype=np.int64)
    if sizes.size == 0:
        raise MetricError("metric undefined on an empty list of prediction sets")
    return sizes


def coverage(sets: Sequence[PredictionSet], truth) -> float:
    """Fraction of records whose prediction set contains the true label."""
    truth = np.asarray(truth, dtype=np.int64).reshape(-1)
    if len(sets) != truth.size:
        raise MetricError(f"length mismatch: {len(sets)} sets vs {truth.size} labels")
    if truth.size == 0:
        raise MetricError("metric undefined on empty input")
    return float(np.mean([int(y) in s for s, y in zip(sets, truth)]))


def avg_set_size(sets: Sequence[PredictionSet]) -> float:
    return float(_sizes(sets).mean())


def singleton_rate(sets: Sequence[PredictionSet]) -> float:
    return float(np.mean(_sizes(sets) == 1))


def uacc(accuracy: float, K: int, avg_size: float) -> float:
    """Uncertainty-aware accuracy, ``accuracy * sqrt(K / avg_size)``. May exceed 1."""
    if K < 2:
        raise MetricError(f"K must be >= 2, got {K}")
    if not 0.0 <= accuracy <= 1.0:
        raise MetricError(f"accuracy must lie in [0, 1], got {accuracy!r}")
    if not avg_size > 0:
        raise MetricError("UAcc undefined: average set size is 0 (every prediction set is empty)")
    return accuracy * math.sqrt(K / avg_size)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_f1: float
    qwk: float
    coverage: float
    avg_set_size: float
    singleton_rate: float
    uacc: float
    n_test: int
    K: int
    alpha: float
    q_alpha: float
    empty_set_rate: float = 0.0
    dataset: Optional[str] = None
    system: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        return cls(**doc)


def evaluate(
    model: ConformalModel,
    test: RecordSet,
    dataset: Optional[str] = None,
    system: Optional[str] = None,
) -> EvalReport:
    """Compute every metric on a labelled test set in one pass."""
    if len(test) == 0:
        raise MetricError("test set is empty")
    try:
        test.require_truth()
    except ValidationError as exc:
        raise MetricError(str(exc)) from None
    K = test.K
    truth = test.labels
    pred = point_predictions(test.probs)
    sets = predict_batch(model, test)
    acc = accuracy(pred, truth)
    size = avg_set_size(sets)
    return EvalReport(
        accuracy=acc,
        macro_f1=macro_f1(pred, truth, K),
        qwk=qwk(pred, truth, K),
        coverage=coverage(sets, truth),
        avg_set_size=size,
        singleton_rate=singleton_rate(sets),
        uacc=uacc(acc, K, size),
        n_test=len(test),
        K=K,
        alpha=model.alpha,
        q_alpha=model.q_alpha,
        empty_set_rate=float(np.mean(_sizes(sets) == 0)),
        dataset=dataset,
        system=system,
    )


TABLE_COLUMNS = ("Dataset", "Model", "QWK", "Acc.", "F1", "Coverage", "Avg |C|", "UAcc")


def format_table(reports: Sequence[EvalReport]) -> str:
    """Aligned plain-text table, one row per report, metrics at 2 decimals."""
    rows = []
    previous = object()
    for r in reports:
        # repeat the dataset name only when it changes
        ds = r.dataset or "-"
        rows.append([
            ds if ds != previous else "",
            r.system or "-",
            *(f"{v:.2f}" for v in (r.qwk, r.accuracy, r.macro_f1, r.coverage, r.avg_set_size, r.uacc)),
        ])
        previous = ds
    widths = [max(len(h), *(len(row[c]) for row in rows)) if rows else len(h)
              for c, h in enumerate(TABLE_COLUMNS)]

    def line(cells):
        return "  ".join(
            cell.ljust(w) if c < 2 else cell.rjust(w) for c, (cell, w) in enumerate(zip(cells, widths))
        ).rstrip()

    rule = "-" * len(line(TABLE_COLUMNS))
    return "\n".join([line(TABLE_COLUMNS), rule, *(line(r) for r in rows)]) + "\n"
