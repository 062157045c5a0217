"""Split conformal prediction with the least-ambiguous-classifier (LAC) score.

The nonconformity of label ``y`` for a record is ``1 - p(y)``. Calibration
picks the ``ceil((n+1)(1-alpha))``-th smallest calibration score as the
threshold ``q_alpha``; a prediction set holds every label whose score is
``<= q_alpha``. Under exchangeability the set contains the true label with
probability at least ``1 - alpha``.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .dataset import RecordSet, atomic_write_text
from .errors import CalibrationError, RecordFormatError, ValidationError
from .labels import LabelSpace

__all__ = [
    "ConformalModel",
    "PredictionSet",
    "lac_score",
    "lac_scores",
    "conformal_rank",
    "conformal_quantile",
    "calibrate",
    "predict_set",
    "predict_mask",
    "predict_batch",
    "save_model",
    "load_model",
    "format_predictions",
    "write_predictions",
    "load_predictions",
    "file_sha256",
]


@dataclass(frozen=True)
class ConformalModel:
    """A calibrated threshold plus the metadata needed to audit it."""

    alpha: float
    q_alpha: float
    n_calibration: int
    label_space: LabelSpace
    force_nonempty: bool = False
    calibration_sha256: Optional[str] = None

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not 0.0 <= self.q_alpha <= 1.0:
            raise ValidationError(f"q_alpha must lie in [0, 1], got {self.q_alpha!r}")
        if self.n_calibration < 1:
            raise ValidationError(f"n_calibration must be >= 1, got {self.n_calibration}")


@dataclass(frozen=True)
class PredictionSet:
    record_id: str
    members: tuple

    def __len__(self):
        return len(self.members)

    def __contains__(self, label):
        return label in self.members


def _check_alpha(alpha):
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")


def lac_score(probs, label: int) -> float:
    """Nonconformity ``1 - probs[label]``; lower means more confident."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[-1]:
        raise ValidationError(f"label {label} out of range for K={probs.shape[-1]}")
    return float(1.0 - probs[label])


def lac_scores(records: RecordSet) -> np.ndarray:
    """True-label LAC scores for every record, in record order."""
    records.require_truth()
    return 1.0 - records.probs[np.arange(len(records)), records.labels]


def conformal_rank(n: int, alpha: float) -> int:
    """1-based rank ``ceil((n+1)(1-alpha))`` of the calibration order statistic.

    ``alpha`` is read as its shortest decimal representation (0.1 is one
    tenth), which keeps e.g. ``n=9, alpha=0.1`` at exactly rank 9.
    """
    return math.ceil((n + 1) * (1 - Fraction(repr(float(alpha)))))


def conformal_quantile(scores, alpha: float) -> float:
    """The finite-sample conformal quantile of ``scores``.

    Returns the ``conformal_rank(n, alpha)``-th smallest score exactly (no
    interpolation), or ``1.0`` when that rank exceeds ``n``.
    """
    _check_alpha(alpha)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    n = scores.size
    if n == 0:
        raise CalibrationError("calibration set is empty")
    k = conformal_rank(n, alpha)
    if k > n:
        return 1.0
    return float(np.partition(scores, k - 1)[k - 1])


def calibrate(
    calibration: RecordSet,
    alpha: float = 0.1,
    force_nonempty: bool = False,
    calibration_sha256: Optional[str] = None,
) -> ConformalModel:
    """Fit the LAC threshold on labelled calibration records."""
    _check_alpha(alpha)
    if len(calibration) == 0:
        raise CalibrationError("calibration set is empty")
    try:
        scores = lac_scores(calibration)
    except ValidationError as exc:
        raise CalibrationError(str(exc)) from None
    return ConformalModel(
        alpha=float(alpha),
        q_alpha=conformal_quantile(scores, alpha),
        n_calibration=len(calibration),
        label_space=calibration.label_space,
        force_nonempty=bool(force_nonempty),
        calibration_sha256=calibration_sha256,
    )


def predict_mask(model: ConformalModel, probs) -> np.ndarray:
    """Boolean ``(n, K)`` membership mask for a batch of probability rows."""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    if probs.shape[1] != model.label_space.K:
        raise ValidationError(
            f"probability rows have {probs.shape[1]} entries, model expects K={model.label_space.K}"
        )
    mask = (1.0 - probs) <= model.q_alpha
    if model.force_nonempty:
        empty = ~mask.any(axis=1)
        if empty.any():
            # argmax picks the lowest index among ties
            mask[np.flatnonzero(empty), probs[empty].argmax(axis=1)] = True
    return mask


def predict_set(model: ConformalModel, probs, record_id: str = "") -> PredictionSet:
    mask = predict_mask(model, probs)
    if mask.shape[0] != 1:
        raise ValidationError("predict_set takes a single probability vector")
    return PredictionSet(record_id, tuple(int(i) for i in np.flatnonzero(mask[0])))


def predict_batch(model: ConformalModel, records: RecordSet) -> list:
    """Prediction sets for every record, in record order."""
    if records.label_space != model.label_space:
        raise ValidationError("record set and model use different label spaces")
    if len(records) == 0:
        return []
    mask = predict_mask(model, records.probs)
    return [
        PredictionSet(rid, tuple(int(i) for i in np.flatnonzero(row)))
        for rid, row in zip(records.ids, mask)
    ]


# -- files -------------------------------------------------------------------


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def model_to_dict(model: ConformalModel) -> dict:
    return {
        "alpha": model.alpha,
        "q_alpha": model.q_alpha,
        "n_calibration": model.n_calibration,
        "labels": list(model.label_space.names),
        "ordinal_values": None if model.label_space.ordinal_values is None
        else list(model.label_space.ordinal_values),
        "force_nonempty": model.force_nonempty,
        "calibration_sha256": model.calibration_sha256,
    }


def save_model(model: ConformalModel, path):
    atomic_write_text(path, json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path) -> ConformalModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        space = LabelSpace(tuple(doc["labels"]), doc.get("ordinal_values"))
        return ConformalModel(
            alpha=float(doc["alpha"]),
            q_alpha=float(doc["q_alpha"]),
            n_calibration=int(doc["n_calibration"]),
            label_space=space,
            force_nonempty=bool(doc.get("force_nonempty", False)),
            calibration_sha256=doc.get("calibration_sha256"),
        )
    except json.JSONDecodeError as exc:
        raise RecordFormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, RecordFormatError):
            raise
        raise RecordFormatError(f"malformed model file: {exc}", path) from None


def format_predictions(sets: Sequence[PredictionSet], label_space: LabelSpace) -> str:
    names = label_space.names
    return "".join(
        json.dumps({"id": s.record_id, "set": [names[i] for i in s.members]}, ensure_ascii=False) + "\n"
        for s in sets
    )


def write_predictions(sets: Sequence[PredictionSet], label_space: LabelSpace, path: Union[str, os.PathLike]):
    atomic_write_text(path, format_predictions(sets, label_space))


def load_predictions(path, label_space: LabelSpace) -> list:
    sets = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                members = sorted({label_space.index(name) for name in obj["set"]})
                sets.append(PredictionSet(str(obj["id"]), tuple(members)))
            except json.JSONDecodeError as exc:
                raise RecordFormatError(f"invalid JSON: {exc.msg}", path, lineno) from None
            except (KeyError, TypeError, ValidationError) as exc:
                raise RecordFormatError(f"malformed prediction: {exc}", path, lineno) from None
    return sets
