"""Probability records, manifests, and the seeded train/calibration/test split.

Record files are JSON Lines, one object per record::

    {"id": "e001", "probs": [0.1, 0.7, 0.2], "label": "medium"}
    {"id": "e002", "probs": [0.6, 0.3, 0.1], "raw_score": 12}

``label`` and ``raw_score`` are mutually exclusive and both optional. A
``raw_score`` is only accepted when the manifest declares a band map.

Manifests are JSON documents::

    {"labels": ["low", "medium", "high"],
     "ordinal_values": [1, 2, 3],
     "band_map": {"scale_min": 1, "cut_points": [18, 30, 40]}}
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from ._rng import permutation
from .errors import RecordFormatError, ValidationError
from .labels import BandMap, LabelSpace, map_raw_score

__all__ = [
    "PROB_TOLERANCE",
    "ProbRecord",
    "RecordSet",
    "Manifest",
    "SplitSpec",
    "load_manifest",
    "write_manifest",
    "load_records",
    "write_records",
    "split_sizes",
    "split",
    "split_report",
    "atomic_write_text",
]

PROB_TOLERANCE = 1e-6
NO_LABEL = -1

PathLike = Union[str, os.PathLike]


@dataclass(frozen=True)
class ProbRecord:
    """One example: an id, a probability vector, and an optional true label index."""

    id: str
    probs: np.ndarray
    true_label: Optional[int] = None

    def __eq__(self, other):
        if not isinstance(other, ProbRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.true_label == other.true_label
            and np.array_equal(self.probs, other.probs)
        )

    __hash__ = None


def _normalise(probs: np.ndarray, ids: Sequence[str]) -> np.ndarray:
    """Validate rows and renormalise those off by more than rounding noise.

    Rows already summing to 1 within a few ulps are left untouched so that
    loading is idempotent and write/load round-trips are exact.
    """
    n, K = probs.shape
    if not np.all(np.isfinite(probs)):
        bad = int(np.flatnonzero(~np.isfinite(probs).all(axis=1))[0])
        raise ValidationError(f"record {ids[bad]!r}: probabilities must be finite")
    out_of_range = (probs < 0) | (probs > 1)
    if out_of_range.any():
        bad = int(np.flatnonzero(out_of_range.any(axis=1))[0])
        raise ValidationError(f"record {ids[bad]!r}: probabilities must lie in [0, 1]")
    sums = probs.sum(axis=1)
    off = np.abs(sums - 1.0)
    if (off > PROB_TOLERANCE).any():
        bad = int(np.flatnonzero(off > PROB_TOLERANCE)[0])
        raise ValidationError(
            f"record {ids[bad]!r}: probabilities sum to {sums[bad]:.9g}, not 1 "
            f"(tolerance {PROB_TOLERANCE:g})"
        )
    fix = off > 8 * K * np.finfo(np.float64).eps
    if fix.any():
        probs = probs.copy()
        probs[fix] /= sums[fix, None]
    return probs


@dataclass(frozen=True, eq=False)
class RecordSet:
    """An ordered, immutable collection of probability records sharing one label space.

    Stored column-wise: ``probs`` is an ``(n, K)`` float64 array and ``labels``
    an ``(n,)`` int64 array holding ``-1`` where the true label is unknown.
    Both arrays are read-only.
    """

    label_space: LabelSpace
    ids: tuple
    probs: np.ndarray
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        K = self.label_space.K
        ids = tuple(self.ids)
        if not all(isinstance(i, str) for i in ids):
            raise ValidationError("record ids must be strings")
        if len(set(ids)) != len(ids):
            seen = set()
            dup = next(i for i in ids if i in seen or seen.add(i))
            raise ValidationError(f"duplicate record id {dup!r}")
        probs = np.asarray(self.probs, dtype=np.float64)
        if len(ids) == 0 and probs.size == 0:
            probs = probs.reshape(0, K)
        if probs.ndim != 2 or probs.shape[0] != len(ids) or probs.shape[1] != K:
            raise ValidationError(
                f"probability array has shape {probs.shape}, expected ({len(ids)}, {K})"
            )
        probs = _normalise(probs, ids)
        if self.labels is None:
            labels = np.full(len(ids), NO_LABEL, dtype=np.int64)
        elif isinstance(self.labels, np.ndarray):
            labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        else:
            labels = np.array(
                [NO_LABEL if v is None else v for v in self.labels], dtype=np.int64
            ).reshape(-1)
        if labels.shape != (len(ids),):
            raise ValidationError(f"got {labels.shape[0]} labels for {len(ids)} records")
        bad = (labels < NO_LABEL) | (labels >= K)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValidationError(f"record {ids[i]!r}: label index {labels[i]} out of range for K={K}")
        if probs is self.probs:
            probs = probs.copy()
        probs.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_records(cls, label_space: LabelSpace, records: Iterable[ProbRecord]) -> "RecordSet":
        records = list(records)
        K = label_space.K
        probs = np.array([np.asarray(r.probs, dtype=np.float64) for r in records]).reshape(-1, K) \
            if records else np.empty((0, K))
        return cls(label_space, [r.id for r in records], probs, [r.true_label for r in records])

    def __len__(self):
        return len(self.ids)

    def __getitem__(self, i: int) -> ProbRecord:
        label = int(self.labels[i])
        return ProbRecord(self.ids[i], self.probs[i], None if label == NO_LABEL else label)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, RecordSet):
            return NotImplemented
        return (
            self.label_space == other.label_space
            and self.ids == other.ids
            and np.array_equal(self.probs, other.probs)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None

    @property
    def K(self) -> int:
        return self.label_space.K

    @property
    def records(self) -> list:
        return list(self)

    @property
    def has_truth(self) -> bool:
        return bool(np.all(self.labels != NO_LABEL))

    def take(self, indices: Sequence[int]) -> "RecordSet":
        """Sub-set in the given index order."""
        idx = np.asarray(indices, dtype=np.int64)
        return RecordSet(self.label_space, [self.ids[i] for i in idx], self.probs[idx], self.labels[idx])

    def require_truth(self):
        """Raise naming the first record without a true label."""
        missing = np.flatnonzero(self.labels == NO_LABEL)
        if missing.size:
            raise ValidationError(f"record {self.ids[int(missing[0])]!r} has no true label")


# -- manifests ---------------------------------------------------------------


@dataclass(frozen=True)
class Manifest:
    label_space: LabelSpace
    band_map: Optional[BandMap] = None

    def to_dict(self) -> dict:
        doc = {"labels": list(self.label_space.names)}
        if self.label_space.ordinal_values is not None:
            doc["ordinal_values"] = list(self.label_space.ordinal_values)
        if self.band_map is not None:
            doc["band_map"] = {
                "scale_min": self.band_map.scale_min,
                "cut_points": list(self.band_map.cut_points),
            }
        return doc

    @classmethod
    def from_dict(cls, doc: dict, path=None) -> "Manifest":
        if not isinstance(doc, dict) or "labels" not in doc:
            raise RecordFormatError("manifest must be an object with a 'labels' array", path)
        try:
            space = LabelSpace(tuple(doc["labels"]), doc.get("ordinal_values"))
            band_map = None
            if doc.get("band_map") is not None:
                bm = doc["band_map"]
                band_map = BandMap(tuple(bm["cut_points"]), space, int(bm.get("scale_min", 1)))
        except (TypeError, KeyError) as exc:
            raise RecordFormatError(f"malformed manifest: {exc}", path) from None
        except ValidationError as exc:
            raise RecordFormatError(str(exc), path) from None
        return cls(space, band_map)


def load_manifest(path: PathLike) -> Manifest:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RecordFormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    return Manifest.from_dict(doc, path)


def write_manifest(manifest: Manifest, path: PathLike):
    atomic_write_text(path, json.dumps(manifest.to_dict(), indent=2) + "\n")


# -- record files ------------------------------------------------------------


def _parse_record(line: str, manifest: Manifest, path, lineno: int):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordFormatError(f"invalid JSON: {exc.msg}", path, lineno) from None
    if not isinstance(obj, dict):
        raise RecordFormatError("record must be a JSON object", path, lineno)
    rid = obj.get("id")
    if not isinstance(rid, str):
        raise RecordFormatError("missing or non-string 'id'", path, lineno)
    probs = obj.get("probs")
    K = manifest.label_space.K
    if not isinstance(probs, list) or not all(
        isinstance(p, (int, float)) and not isinstance(p, bool) for p in probs
    ):
        raise RecordFormatError(f"record {rid!r}: 'probs' must be an array of numbers", path, lineno)
    if len(probs) != K:
        raise RecordFormatError(f"record {rid!r}: expected {K} probabilities, got {len(probs)}", path, lineno)
    if "label" in obj and "raw_score" in obj:
        raise RecordFormatError(f"record {rid!r}: give either 'label' or 'raw_score', not both", path, lineno)
    label = None
    try:
        if obj.get("label") is not None:
            if not isinstance(obj["label"], str):
                raise ValidationError("'label' must be a string")
            label = manifest.label_space.index(obj["label"])
        elif obj.get("raw_score") is not None:
            if manifest.band_map is None:
                raise ValidationError("'raw_score' given but the manifest has no band_map")
            label = map_raw_score(obj["raw_score"], manifest.band_map)
    except ValidationError as exc:
        raise RecordFormatError(f"record {rid!r}: {exc}", path, lineno) from None
    return rid, probs, label


def load_records(path: PathLike, manifest: Union[Manifest, PathLike]) -> RecordSet:
    """Read a JSON Lines record file into a validated :class:`RecordSet`.

    Blank lines are skipped. Errors carry the 1-based line number.
    """
    if not isinstance(manifest, Manifest):
        manifest = load_manifest(manifest)
    ids, rows, labels, linenos = [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rid, probs, label = _parse_record(line, manifest, path, lineno)
            ids.append(rid)
            rows.append(probs)
            labels.append(label)
            linenos.append(lineno)
    K = manifest.label_space.K
    try:
        return RecordSet(manifest.label_space, ids, np.array(rows, dtype=np.float64).reshape(-1, K), labels)
    except ValidationError as exc:
        # re-locate the offending record for the diagnostic
        msg = str(exc)
        lineno = next((ln for rid, ln in zip(ids, linenos) if repr(rid) in msg), None)
        raise RecordFormatError(msg, path, lineno) from None


def format_records(records: RecordSet) -> str:
    lines = []
    names = records.label_space.names
    for rid, probs, label in zip(records.ids, records.probs, records.labels):
        obj = {"id": rid, "probs": [float(p) for p in probs]}
        if label != NO_LABEL:
            obj["label"] = names[label]
        lines.append(json.dumps(obj, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def write_records(records: RecordSet, path: PathLike):
    """Write ``records`` as JSON Lines. Floats use shortest round-trip repr."""
    atomic_write_text(path, format_records(records))


def atomic_write_text(path: PathLike, text: str):
    """Write via a temp file in the same directory so failures leave nothing behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- splitting ---------------------------------------------------------------


def _exact(x) -> Fraction:
    # decimal reading, so 0.7 means 7/10 rather than its binary neighbour
    return Fraction(repr(float(x))) if not isinstance(x, Fraction) else x


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


@dataclass(frozen=True)
class SplitSpec:
    """Train/calibration/test fractions plus the shuffle seed."""

    fractions: tuple = (0.70, 0.15, 0.15)
    seed: int = 42

    def __post_init__(self):
        fr = tuple(self.fractions)
        object.__setattr__(self, "fractions", fr)
        if len(fr) != 3 or any(f <= 0 for f in fr):
            raise ValidationError(f"need three positive fractions, got {fr}")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ValidationError(f"fractions must sum to 1, got {sum(fr)!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


def split_sizes(n: int, fractions=(0.70, 0.15, 0.15)) -> tuple:
    """Part sizes for ``n`` records.

    The train size is ``fractions[0] * n`` rounded half-up; the remainder is
    shared between calibration and test in proportion, rounding half-up in
    calibration's favour. At 70/15/15 this gives 1783 -> (1248, 268, 267),
    12100 -> (8470, 1815, 1815) and 2488 -> (1742, 373, 373).
    """
    a, b, c = (_exact(f) for f in fractions)
    n_train = _round_half_up(a * n)
    rest = n - n_train
    n_cal = _round_half_up(rest * b / (b + c))
    n_test = rest - n_cal
    if min(n_train, n_cal, n_test) < 1:
        raise ValidationError(
            f"{n} records cannot be split into three nonempty parts "
            f"(sizes would be {n_train}, {n_cal}, {n_test})"
        )
    return n_train, n_cal, n_test


def split(records: RecordSet, spec: SplitSpec = SplitSpec()) -> tuple:
    """Shuffle with the seeded permutation, then cut into (train, calibration, test)."""
    n = len(records)
    if n < 3:
        raise ValidationError(f"need at least 3 records to split, got {n}")
    n_train, n_cal, _ = split_sizes(n, spec.fractions)
    order = permutation(n, spec.seed)
    return (
        records.take(order[:n_train]),
        records.take(order[n_train:n_train + n_cal]),
        records.take(order[n_train + n_cal:]),
    )


def split_report(spec: SplitSpec, parts: tuple) -> dict:
    train, cal, test = parts
    return {
        "seed": spec.seed,
        "fractions": list(spec.fractions),
        "n_records": len(train) + len(cal) + len(test),
        "counts": {"train": len(train), "calibration": len(cal), "test": len(test)},
    }
