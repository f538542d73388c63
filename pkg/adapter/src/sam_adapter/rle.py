"""Run-length codec for the wire protocol.

Row-major scan; counts alternate 0-runs and 1-runs starting with zeros, so
only the first count may be 0. Counts always sum to h*w.
"""

from __future__ import annotations

import numpy as np


def encode(bitmap: np.ndarray) -> list[int]:
    flat = np.asarray(bitmap, dtype=bool).ravel()
    if flat.size == 0:
        raise ValueError("cannot encode an empty bitmap")
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts = [0] + counts
    return [int(c) for c in counts]


def decode(counts: list[int], h: int, w: int) -> np.ndarray:
    arr = np.asarray(counts, dtype=np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError("negative run count")
    if int(arr.sum()) != h * w:
        raise ValueError(f"counts sum to {int(arr.sum())}, expected {h * w}")
    values = np.zeros(arr.size, dtype=bool)
    values[1::2] = True
    return np.repeat(values, arr).reshape(h, w)
