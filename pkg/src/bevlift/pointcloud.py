"""Point cloud loading, validation, cropping, and intensity normalization.

A cloud is stored as an (N, 4) float32 array of [x, y, z, intensity] records,
matching the on-disk binary layout so that load/save round trips are bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import EmptyCloud, FormatError, IoFailure

RECORD_BYTES = 16  # four little-endian float32 fields per point

BINARY_XYZI = "binary_xyzi"
TEXT_XYZI = "text_xyzi"

MINMAX_PER_FRAME = "minmax_per_frame"
CLIP_UNIT = "clip_unit"


class Point(NamedTuple):
    x: float
    y: float
    z: float
    intensity: float


@dataclass(frozen=True)
class RangeSpec:
    """Inclusive horizontal crop bounds in meters."""

    lx: float
    ux: float
    ly: float
    uy: float

    def __post_init__(self):
        for name in ("lx", "ux", "ly", "uy"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"range bound {name} must be finite")
        if not self.lx < self.ux:
            raise ValueError(f"lx must be < ux (got {self.lx}, {self.ux})")
        if not self.ly < self.uy:
            raise ValueError(f"ly must be < uy (got {self.ly}, {self.uy})")


@dataclass(eq=False)
class PointCloud:
    """Ordered point records with an opaque frame label."""

    data: np.ndarray = field(default_factory=lambda: np.empty((0, 4), dtype=np.float32))
    frame_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError(f"cloud data must be (N, 4), got {arr.shape}")
        if arr.size and not np.isfinite(arr).all():
            raise ValueError("cloud contains NaN/Inf fields")
        self.data = arr

    def __len__(self) -> int:
        return self.data.shape[0]

    def point(self, i: int) -> Point:
        x, y, z, r = self.data[i]
        return Point(float(x), float(y), float(z), float(r))

    @property
    def x(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.data[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.data[:, 2]

    @property
    def intensity(self) -> np.ndarray:
        return self.data[:, 3]


def load_point_cloud(path: str | Path, fmt: str = BINARY_XYZI) -> PointCloud:
    """Read a cloud from disk; one Point per record, in file order."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if fmt == BINARY_XYZI:
        if len(raw) % RECORD_BYTES != 0:
            raise FormatError(
                f"{path}: byte length {len(raw)} is not a multiple of {RECORD_BYTES}"
            )
        arr = np.frombuffer(raw, dtype="<f4").reshape(-1, 4)
    elif fmt == TEXT_XYZI:
        rows = []
        for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.replace(",", " ").split()
            if len(tokens) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 fields, got {len(tokens)}")
            try:
                rows.append([float(t) for t in tokens])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric token") from exc
        arr = np.array(rows, dtype=np.float32).reshape(-1, 4)
    else:
        raise FormatError(f"unknown point cloud format {fmt!r}")

    if arr.size and not np.isfinite(arr).all():
        raise ValueError(f"{path}: NaN/Inf field in point record")
    return PointCloud(arr.copy(), frame_id=path.stem)


def save_point_cloud(cloud: PointCloud, path: str | Path, fmt: str = BINARY_XYZI) -> None:
    """Write a cloud to disk, mirroring the load formats."""
    path = Path(path)
    if fmt == BINARY_XYZI:
        payload = np.ascontiguousarray(cloud.data, dtype="<f4").tobytes()
    elif fmt == TEXT_XYZI:
        lines = [" ".join(f"{v:.9g}" for v in row) for row in cloud.data]
        payload = ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    else:
        raise FormatError(f"unknown point cloud format {fmt!r}")
    try:
        path.write_bytes(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def crop_to_range(cloud: PointCloud, rng: RangeSpec) -> PointCloud:
    """Keep points with lx <= x <= ux and ly <= y <= uy (z unconstrained)."""
    x, y = cloud.x, cloud.y
    keep = (x >= rng.lx) & (x <= rng.ux) & (y >= rng.ly) & (y <= rng.uy)
    return PointCloud(cloud.data[keep], frame_id=cloud.frame_id)


def normalize_intensity(cloud: PointCloud, mode: str = MINMAX_PER_FRAME) -> PointCloud:
    """Map intensities into [0, 1].

    minmax_per_frame maps min->0 and max->1 linearly (all-equal frames map to
    0.5 so they stay visible after palette lookup); clip_unit clamps raw values.
    """
    if mode == MINMAX_PER_FRAME:
        if len(cloud) == 0:
            raise EmptyCloud("minmax_per_frame needs a nonempty cloud")
        r = cloud.intensity
        lo, hi = float(r.min()), float(r.max())
        if lo == hi:
            norm = np.full(len(cloud), 0.5, dtype=np.float32)
        else:
            norm = (r - lo) / np.float32(hi - lo)
    elif mode == CLIP_UNIT:
        norm = np.clip(cloud.intensity, 0.0, 1.0)
    else:
        raise ValueError(f"unknown intensity mode {mode!r}")
    data = cloud.data.copy()
    data[:, 3] = norm
    return PointCloud(data, frame_id=cloud.frame_id)
