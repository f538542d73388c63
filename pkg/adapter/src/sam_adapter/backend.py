"""Inference backends.

SamBackend wraps the official segment-anything predictor around a checkpoint;
StubBackend is a deterministic weights-free stand-in with the same interface,
used for protocol conformance tests and smoke runs.
"""

from __future__ import annotations

from collections import deque
from typing import Protocol

import numpy as np


class PredictorBackend(Protocol):
    def set_image(self, image: np.ndarray) -> None: ...

    def predict(self, u: float, v: float, multimask: bool) -> list[tuple[np.ndarray, float]]:
        """Masks for one point prompt at row u, column v: (bitmap, score) pairs."""
        ...


class SamBackend:
    """Real SAM inference; requires the segment-anything package and weights."""

    def __init__(self, model_variant: str, checkpoint: str):
        try:
            import torch
            from segment_anything import SamPredictor, sam_model_registry
        except ImportError as exc:
            raise RuntimeError(
                "SamBackend needs the 'sam' extra (segment-anything + torch) installed"
            ) from exc
        torch.manual_seed(0)
        model = sam_model_registry[model_variant](checkpoint=checkpoint)
        model.eval()
        self._predictor = SamPredictor(model)

    def set_image(self, image: np.ndarray) -> None:
        self._predictor.set_image(image)

    def predict(self, u: float, v: float, multimask: bool) -> list[tuple[np.ndarray, float]]:
        # SAM takes (x, y) = (column, row)
        masks, scores, _ = self._predictor.predict(
            point_coords=np.array([[v, u]], dtype=np.float32),
            point_labels=np.array([1], dtype=np.int64),
            multimask_output=multimask,
        )
        clamped = np.clip(scores.astype(np.float64), 0.0, 1.0)
        return [(masks[i].astype(bool), float(clamped[i])) for i in range(masks.shape[0])]


class StubBackend:
    """Deterministic fallback: returns the 4-connected activated blob at the
    prompt (score 0.88) plus, under multimask, a small block around the prompt
    (score 0.64). Activated means any RGB channel nonzero."""

    def __init__(self, seek_radius: int = 3, block_radius: int = 2):
        self.seek_radius = seek_radius
        self.block_radius = block_radius
        self._active: np.ndarray | None = None

    def set_image(self, image: np.ndarray) -> None:
        self._active = np.asarray(image).any(axis=2)

    def _nearest_active(self, r: int, c: int) -> tuple[int, int] | None:
        active = self._active
        h, w = active.shape
        for radius in range(self.seek_radius + 1):
            r0, r1 = max(0, r - radius), min(h, r + radius + 1)
            c0, c1 = max(0, c - radius), min(w, c + radius + 1)
            window = active[r0:r1, c0:c1]
            if window.any():
                rr, cc = np.nonzero(window)
                return r0 + int(rr[0]), c0 + int(cc[0])
        return None

    def _flood(self, seed: tuple[int, int]) -> np.ndarray:
        active = self._active
        h, w = active.shape
        out = np.zeros_like(active)
        queue = deque([seed])
        out[seed] = True
        while queue:
            r, c = queue.popleft()
            for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= nr < h and 0 <= nc < w and active[nr, nc] and not out[nr, nc]:
                    out[nr, nc] = True
                    queue.append((nr, nc))
        return out

    def predict(self, u: float, v: float, multimask: bool) -> list[tuple[np.ndarray, float]]:
        if self._active is None:
            raise RuntimeError("set_image was not called")
        h, w = self._active.shape
        r = min(max(int(np.floor(u + 0.5)), 0), h - 1)
        c = min(max(int(np.floor(v + 0.5)), 0), w - 1)
        results: list[tuple[np.ndarray, float]] = []
        seed = self._nearest_active(r, c)
        if seed is not None:
            results.append((self._flood(seed), 0.88))
        if multimask:
            block = np.zeros((h, w), dtype=bool)
            br = self.block_radius
            block[max(0, r - br):r + br + 1, max(0, c - br):c + br + 1] = True
            results.append((block, 0.64))
        return results
