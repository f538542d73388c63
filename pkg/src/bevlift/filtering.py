"""Area and aspect-ratio filtering of segmenter masks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyMask
from .geometry import min_area_rect
from .masks import Mask


@dataclass(frozen=True)
class FilterThresholds:
    """Inclusive pixel-area band and longer/shorter aspect-ratio band."""

    area_lo: float = 200
    area_hi: float = 5000
    ratio_lo: float = 1.5
    ratio_hi: float = 4.0

    def __post_init__(self):
        if not (0 < self.area_lo <= self.area_hi):
            raise ValueError(f"need 0 < area_lo <= area_hi, got [{self.area_lo}, {self.area_hi}]")
        if not (1 <= self.ratio_lo <= self.ratio_hi):
            raise ValueError(f"need 1 <= ratio_lo <= ratio_hi, got [{self.ratio_lo}, {self.ratio_hi}]")


def mask_area(m: Mask) -> int:
    """Foreground pixel count (sum of the odd-position RLE counts)."""
    return m.area


def mask_aspect_ratio(m: Mask) -> float:
    """Longer/shorter side of the mask's minimum-area rotated rectangle."""
    if m.area == 0:
        raise EmptyMask("aspect ratio of an empty mask")
    rect = min_area_rect(m)
    long_side = max(rect.dx2d, rect.dy2d)
    short_side = min(rect.dx2d, rect.dy2d)
    if short_side == 0:
        return math.inf
    return long_side / short_side


def filter_masks(masks: Sequence[Mask], t: FilterThresholds) -> list[Mask]:
    """Keep masks inside both inclusive bands, preserving order."""
    kept = []
    for m in masks:
        area = mask_area(m)
        if not (t.area_lo <= area <= t.area_hi):
            continue
        ratio = mask_aspect_ratio(m)
        if t.ratio_lo <= ratio <= t.ratio_hi:
            kept.append(m)
    return kept
