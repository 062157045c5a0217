"""Ordinal label spaces and raw-score banding.

Labels are always handled internally as indices ``0..K-1``; display names
only matter when reading or writing files.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ValidationError

__all__ = [
    "LabelSpace",
    "BandMap",
    "make_label_space",
    "map_raw_score",
    "THREE_BAND",
    "ASAP_P1",
    "FCE_BAND_MAP",
]


@dataclass(frozen=True)
class LabelSpace:
    """An ordered set of ``K >= 2`` distinct labels.

    Parameters
    ----------
    names : tuple of str
        Display names in ordinal order.
    ordinal_values : tuple of int, optional
        Rubric value for each label, strictly increasing.
    """

    names: tuple
    ordinal_values: Optional[tuple] = None

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 2:
            raise ValidationError(f"a label space needs at least 2 labels, got {len(names)}")
        if not all(isinstance(n, str) and n for n in names):
            raise ValidationError("label names must be nonempty strings")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValidationError(f"duplicate label names: {dupes}")
        if self.ordinal_values is not None:
            values = tuple(int(v) for v in self.ordinal_values)
            object.__setattr__(self, "ordinal_values", values)
            if len(values) != len(names):
                raise ValidationError(
                    f"ordinal_values has {len(values)} entries, expected {len(names)}"
                )
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValidationError("ordinal_values must be strictly increasing")

    @property
    def K(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        """Return the label index for ``name``."""
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown label name {name!r}") from None

    def name(self, index: int) -> str:
        if not 0 <= index < self.K:
            raise ValidationError(f"label index {index} out of range for K={self.K}")
        return self.names[index]


def make_label_space(names: Sequence[str], ordinal_values: Optional[Sequence[int]] = None) -> LabelSpace:
    """Build a validated :class:`LabelSpace`.

    >>> make_label_space(["low", "medium", "high"]).K
    3
    """
    return LabelSpace(tuple(names), None if ordinal_values is None else tuple(ordinal_values))


@dataclass(frozen=True)
class BandMap:
    """Maps integer raw scores onto the labels of ``target``.

    Band ``i`` covers ``(cut_points[i-1], cut_points[i]]``, with the first band
    starting at ``scale_min``. The last cut point is the scale maximum.
    """

    cut_points: tuple
    target: LabelSpace
    scale_min: int = 1

    def __post_init__(self):
        cuts = tuple(int(c) for c in self.cut_points)
        object.__setattr__(self, "cut_points", cuts)
        if len(cuts) != self.target.K:
            raise ValidationError(
                f"band map has {len(cuts)} cut points but the label space has K={self.target.K}"
            )
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValidationError("cut points must be strictly increasing")
        if cuts[0] < self.scale_min:
            raise ValidationError("first cut point lies below the scale minimum")

    @property
    def scale_max(self) -> int:
        return self.cut_points[-1]

    def interval(self, band: int) -> tuple:
        """Inclusive ``(low, high)`` raw-score range of one band."""
        low = self.scale_min if band == 0 else self.cut_points[band - 1] + 1
        return low, self.cut_points[band]


def map_raw_score(raw: int, band_map: BandMap) -> int:
    """Return the index of the first band whose cut point is ``>= raw``."""
    if isinstance(raw, bool) or int(raw) != raw:
        raise ValidationError(f"raw score must be an integer, got {raw!r}")
    raw = int(raw)
    if not band_map.scale_min <= raw <= band_map.scale_max:
        raise ValidationError(
            f"raw score {raw} outside scale [{band_map.scale_min}, {band_map.scale_max}]"
        )
    return bisect.bisect_left(band_map.cut_points, raw)


THREE_BAND = LabelSpace(("low", "medium", "high"))
ASAP_P1 = LabelSpace(tuple(f"s{v}" for v in range(2, 13)), tuple(range(2, 13)))
# FCE holistic 1-40 scale.
FCE_BAND_MAP = BandMap((18, 30, 40), THREE_BAND, scale_min=1)
