"""Mesh-grid point prompts and empty-space pruning."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import BadArgs
from .raster import BevImage, window_max


class Prompt(NamedTuple):
    u: float  # fractional row coordinate
    v: float  # fractional column coordinate


@dataclass(eq=False)
class PromptSet:
    """Ordered prompts; coords is an (N, 2) float array of (u, v) rows."""

    coords: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    grid_n: int = 0

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64).reshape(-1, 2)

    def __len__(self) -> int:
        return self.coords.shape[0]

    def prompt(self, i: int) -> Prompt:
        return Prompt(float(self.coords[i, 0]), float(self.coords[i, 1]))

    def to_json(self) -> str:
        return json.dumps({"grid_n": self.grid_n, "prompts": [[u, v] for u, v in self.coords]})

    @classmethod
    def from_json(cls, text: str) -> "PromptSet":
        d = json.loads(text)
        return cls(np.asarray(d["prompts"], dtype=np.float64).reshape(-1, 2), int(d["grid_n"]))


def generate_grid(n: int, h: int, w: int) -> PromptSet:
    """n x n prompts at cell centers (i+0.5)*h/n, (j+0.5)*w/n, row-major."""
    if n < 1 or h < 1 or w < 1:
        raise BadArgs(f"grid arguments must be positive (n={n}, h={h}, w={w})")
    idx = np.arange(n, dtype=np.float64) + 0.5
    us = idx * (h / n)
    vs = idx * (w / n)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    return PromptSet(np.stack([uu.ravel(), vv.ravel()], axis=1), grid_n=n)


def round_half_up(a: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(a, dtype=np.float64) + 0.5).astype(np.int64)


def prune_prompts(ps: PromptSet, img: BevImage, radius: int = 3) -> PromptSet:
    """Drop prompts with no activated pixel within Chebyshev distance radius.

    Activated means any RGB channel nonzero; (0,0,0) cells are empty by the
    raster invariant. Order of the surviving prompts is preserved.
    """
    if radius < 0:
        raise BadArgs(f"radius must be >= 0, got {radius}")
    if len(ps) == 0:
        return PromptSet(ps.coords.copy(), ps.grid_n)
    active = img.pixels.any(axis=2).astype(np.uint8)
    if radius > 0:
        active = window_max(active, 2 * radius + 1)
    ru = np.clip(round_half_up(ps.coords[:, 0]), 0, img.height - 1)
    rv = np.clip(round_half_up(ps.coords[:, 1]), 0, img.width - 1)
    keep = active[ru, rv].astype(bool)
    return PromptSet(ps.coords[keep], ps.grid_n)
