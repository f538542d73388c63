"""Colorized bird's-eye-view rasterization and dilation post-processing.

Projection convention: row index cx = floor((ux - x)/sx), column index
cy = floor((uy - y)/sy), both clamped into the image so the inclusive lower
range bound stays on the last row/column. The floor argument gets a 1e-9 snap
because IEEE division turns exact-decimal quotients like 30/0.1 into
299.999...94, which would land decimal-aligned points one cell off.
"""

from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import BadKernel, DomainError, IoFailure, NotNormalized, OutOfRange
from .pointcloud import Point, PointCloud, RangeSpec

INDEX_EPS = 1e-9


def _axis_cells(lo: float, hi: float, step: float, name: str) -> int:
    n = (hi - lo) / step
    cells = round(n)
    if cells < 1 or abs(n - cells) > 1e-6:
        raise ValueError(f"({name}) extent {hi - lo} is not an integer multiple of {step}")
    return int(cells)


@dataclass(frozen=True)
class GridConfig:
    """Pillar grid geometry plus the dilation kernel width."""

    range: RangeSpec
    sx: float = 0.1
    sy: float = 0.1
    dilation_kernel: int = 3

    def __post_init__(self):
        if self.sx <= 0 or self.sy <= 0:
            raise ValueError(f"pillar sizes must be positive (got {self.sx}, {self.sy})")
        k = self.dilation_kernel
        if not isinstance(k, int) or k < 1 or k % 2 == 0:
            raise BadKernel(f"dilation kernel must be odd and >= 1, got {k}")
        # validate integer cell counts eagerly
        _axis_cells(self.range.lx, self.range.ux, self.sx, "x")
        _axis_cells(self.range.ly, self.range.uy, self.sy, "y")

    @property
    def height(self) -> int:
        return _axis_cells(self.range.lx, self.range.ux, self.sx, "x")

    @property
    def width(self) -> int:
        return _axis_cells(self.range.ly, self.range.uy, self.sy, "y")

    def sidecar_dict(self) -> dict:
        return {
            "lx": self.range.lx,
            "ux": self.range.ux,
            "ly": self.range.ly,
            "uy": self.range.uy,
            "sx": self.sx,
            "sy": self.sy,
            "dilation_kernel": self.dilation_kernel,
        }

    @classmethod
    def from_sidecar_dict(cls, d: dict) -> "GridConfig":
        rng = RangeSpec(d["lx"], d["ux"], d["ly"], d["uy"])
        return cls(range=rng, sx=d["sx"], sy=d["sy"], dilation_kernel=int(d["dilation_kernel"]))


def _default_entries() -> np.ndarray:
    # blue (hue 240deg) -> red (hue 0deg) ramp over 256 steps, full S and V
    out = np.empty((256, 3), dtype=np.uint8)
    for k in range(256):
        hue = 240.0 * (1.0 - k / 255.0) / 360.0
        r, g, b = colorsys.hsv_to_rgb(hue, 1.0, 1.0)
        out[k] = (int(r * 255 + 0.5), int(g * 255 + 0.5), int(b * 255 + 0.5))
    return out


@dataclass(frozen=True, eq=False)
class Palette:
    """256-entry intensity-to-RGB mapping; entry 0 may not be pure black."""

    entries: np.ndarray = field(default_factory=_default_entries)

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.shape != (256, 3):
            raise ValueError(f"palette must have exactly 256 RGB triples, got {arr.shape}")
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("palette channels must be integers in [0, 255]")
        arr = arr.astype(np.uint8)
        if not arr[0].any():
            raise ValueError("palette entry 0 must not be (0,0,0); black is reserved for empty cells")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_json(cls, path: str | Path) -> "Palette":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise IoFailure(f"cannot read palette {path}: {exc}") from exc
        return cls(np.asarray(data))

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps([[int(c) for c in row] for row in self.entries]))


@dataclass(eq=False)
class BevImage:
    """H x W RGB raster; row r tracks the x-axis index, column c the y-axis index."""

    pixels: np.ndarray
    grid: GridConfig

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.uint8)
        expected = (self.grid.height, self.grid.width, 3)
        if arr.shape != expected:
            raise ValueError(f"pixel array {arr.shape} does not match grid {expected}")
        self.pixels = arr

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def sidecar_path(png_path: str | Path) -> Path:
    p = Path(png_path)
    return p.with_suffix(p.suffix + ".json")


def save_bev_image(img: BevImage, png_path: str | Path) -> None:
    """Write 8-bit RGB PNG plus the grid-metadata JSON sidecar."""
    png_path = Path(png_path)
    try:
        Image.fromarray(img.pixels, mode="RGB").save(png_path, format="PNG")
        sidecar_path(png_path).write_text(json.dumps(img.grid.sidecar_dict()))
    except OSError as exc:
        raise IoFailure(f"cannot write {png_path}: {exc}") from exc


def load_bev_image(png_path: str | Path) -> BevImage:
    png_path = Path(png_path)
    try:
        arr = np.asarray(Image.open(png_path).convert("RGB"), dtype=np.uint8)
        grid = GridConfig.from_sidecar_dict(json.loads(sidecar_path(png_path).read_text()))
    except OSError as exc:
        raise IoFailure(f"cannot read {png_path}: {exc}") from exc
    return BevImage(arr, grid)


def png_bytes(img: BevImage) -> bytes:
    import io

    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def _project_axis(coord, upper, step, cells):
    idx = np.floor((upper - coord) / step + INDEX_EPS).astype(np.int64)
    return np.clip(idx, 0, cells - 1)


def project_point(p: Point, grid: GridConfig) -> tuple[int, int]:
    """Map an in-range point to its (row, column) cell."""
    rng = grid.range
    if not (rng.lx <= p.x <= rng.ux and rng.ly <= p.y <= rng.uy):
        raise OutOfRange(f"point ({p.x}, {p.y}) outside grid range")
    cx = _project_axis(np.float64(p.x), rng.ux, grid.sx, grid.height)
    cy = _project_axis(np.float64(p.y), rng.uy, grid.sy, grid.width)
    return int(cx), int(cy)


def project_points(xs: np.ndarray, ys: np.ndarray, grid: GridConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection; caller guarantees the points are in range."""
    rng = grid.range
    cx = _project_axis(xs.astype(np.float64), rng.ux, grid.sx, grid.height)
    cy = _project_axis(ys.astype(np.float64), rng.uy, grid.sy, grid.width)
    return cx, cy


def palette_lookup(r_norm: float, palette: Palette) -> tuple[int, int, int]:
    """Palette entry at index round(r_norm * 255), half-up.

    Arithmetic happens in float64 so scalar lookups agree with the
    vectorized rasterizer for float32-stored intensities.
    """
    r_norm = float(r_norm)
    if not (0.0 <= r_norm <= 1.0):
        raise DomainError(f"normalized intensity {r_norm} outside [0, 1]")
    entry = palette.entries[int(r_norm * 255 + 0.5)]
    return int(entry[0]), int(entry[1]), int(entry[2])


def rasterize(cloud: PointCloud, grid: GridConfig, palette: Palette) -> BevImage:
    """Project a cropped, normalized cloud into a colorized BEV image.

    Cell collisions resolve to the maximum-intensity point; exact intensity
    ties go to the lexicographically smallest (x, y, z), which makes the
    result independent of input order. Cells without points stay (0,0,0).
    """
    h, w = grid.height, grid.width
    img = np.zeros((h, w, 3), dtype=np.uint8)
    if len(cloud) == 0:
        return BevImage(img, grid)

    r = cloud.intensity
    if float(r.min()) < 0.0 or float(r.max()) > 1.0:
        raise NotNormalized("intensities outside [0, 1]; normalize the cloud first")

    rng = grid.range
    x, y, z = cloud.x, cloud.y, cloud.z
    in_range = (x >= rng.lx) & (x <= rng.ux) & (y >= rng.ly) & (y <= rng.uy)
    if not in_range.any():
        return BevImage(img, grid)
    x, y, z, r = x[in_range], y[in_range], z[in_range], r[in_range]

    cx, cy = project_points(x, y, grid)
    cell = cx * w + cy
    # primary: cell; then descending intensity; ties by ascending (x, y, z)
    order = np.lexsort((z, y, x, -r.astype(np.float64), cell))
    cells_sorted = cell[order]
    _, first = np.unique(cells_sorted, return_index=True)
    winners = order[first]

    idx = np.minimum((r[winners].astype(np.float64) * 255 + 0.5).astype(np.int64), 255)
    img[cx[winners], cy[winners]] = palette.entries[idx]
    return BevImage(img, grid)


def window_max(arr: np.ndarray, kernel: int) -> np.ndarray:
    """Per-pixel max over a centered kernel x kernel window, truncated at edges.

    Works on 2-D or 2-D-plus-channels uint8/bool arrays; zero padding is
    equivalent to window truncation because 0 is the minimum value.
    """
    if kernel == 1:
        return arr.copy()
    pad = kernel // 2
    pad_spec = [(pad, pad), (pad, pad)] + [(0, 0)] * (arr.ndim - 2)
    padded = np.pad(arr, pad_spec, mode="constant", constant_values=0)
    win = np.lib.stride_tricks.sliding_window_view(padded, (kernel, kernel), axis=(0, 1))
    return win.max(axis=(-2, -1))


def dilate(img: BevImage, kernel: int | None = None) -> BevImage:
    """Per-channel morphological dilation (channel-wise windowed max)."""
    if kernel is None:
        kernel = img.grid.dilation_kernel
    if not isinstance(kernel, int) or kernel < 1 or kernel % 2 == 0:
        raise BadKernel(f"dilation kernel must be odd and >= 1, got {kernel}")
    return BevImage(window_max(img.pixels, kernel), img.grid)
