"""Lifting 2D rotated boxes to 7-DoF 3D boxes and the per-frame pipeline.

Horizontal attributes come straight from the image-plane box and the grid
(x = ux - (cx+0.5)*sx and friends); vertical center/extent come from the
z-values of cloud points whose BEV projection falls inside the footprint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import NoSupportingPoints
from .filtering import FilterThresholds, filter_masks
from .geometry import RotatedBox2D, canonical_angle, min_area_rect, points_in_rotated_rect
from .masks import SegmentationRequest, SegmenterHandle, dedup_masks, segment
from .pointcloud import MINMAX_PER_FRAME, PointCloud, crop_to_range, normalize_intensity
from .prompts import generate_grid, prune_prompts
from .raster import GridConfig, Palette, dilate, rasterize


@dataclass(frozen=True)
class Box3D:
    """7-DoF metric box: center, dimensions, yaw, plus a confidence score."""

    x3d: float
    y3d: float
    z3d: float
    dx3d: float
    dy3d: float
    dz3d: float
    theta3d: float
    score: float = 1.0

    def __post_init__(self):
        vals = (self.x3d, self.y3d, self.z3d, self.dx3d, self.dy3d, self.dz3d, self.theta3d, self.score)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("box attributes must be finite")
        if self.dx3d <= 0 or self.dy3d <= 0 or self.dz3d < 0:
            raise ValueError(f"bad dimensions ({self.dx3d}, {self.dy3d}, {self.dz3d})")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "x": self.x3d,
            "y": self.y3d,
            "z": self.z3d,
            "dx": self.dx3d,
            "dy": self.dy3d,
            "dz": self.dz3d,
            "theta": self.theta3d,
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Box3D":
        return cls(
            x3d=float(d["x"]),
            y3d=float(d["y"]),
            z3d=float(d["z"]),
            dx3d=float(d["dx"]),
            dy3d=float(d["dy"]),
            dz3d=float(d["dz"]),
            theta3d=float(d["theta"]),
            score=float(d.get("score", 1.0)),
        )

    def footprint(self) -> RotatedBox2D:
        """Metric BEV footprint as a rotated rectangle (units: meters)."""
        return RotatedBox2D(self.x3d, self.y3d, self.dx3d, self.dy3d, canonical_angle(self.theta3d))


@dataclass(eq=False)
class DetectionSet:
    frame_id: str
    boxes: list[Box3D] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"frame_id": self.frame_id, "boxes": [b.to_dict() for b in self.boxes]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "DetectionSet":
        return cls(frame_id=str(d["frame_id"]), boxes=[Box3D.from_dict(b) for b in d["boxes"]])

    @classmethod
    def from_json(cls, text: str) -> "DetectionSet":
        return cls.from_dict(json.loads(text))


@dataclass(eq=False)
class PipelineConfig:
    """Everything detect_frame needs; defaults follow the reference setup."""

    grid: GridConfig
    palette: Palette = field(default_factory=Palette)
    prompt_n: int = 32
    prune_radius: int = 3
    thresholds: FilterThresholds = field(default_factory=FilterThresholds)
    dedup: bool = True
    dedup_iou: float = 0.8
    intensity_mode: str = MINMAX_PER_FRAME
    multimask: bool = True
    prune: bool = True


def lift_box(b: RotatedBox2D, grid: GridConfig, score: float = 1.0) -> Box3D:
    """Horizontal 2D -> 3D projection; z3d/dz3d stay 0 until the vertical pass."""
    rng = grid.range
    return Box3D(
        x3d=rng.ux - (b.cx2d + 0.5) * grid.sx,
        y3d=rng.uy - (b.cy2d + 0.5) * grid.sy,
        z3d=0.0,
        dx3d=b.dx2d * grid.sx,
        dy3d=b.dy2d * grid.sy,
        dz3d=0.0,
        theta3d=b.theta2d,
        score=score,
    )


def vertical_attributes(box: Box3D, cloud: PointCloud, grid: GridConfig) -> Box3D:
    """Fill z3d/dz3d from the z-extent of points inside the BEV footprint.

    Raises NoSupportingPoints when nothing falls inside, in which case the
    caller drops the detection rather than fabricating a height.
    """
    rng = grid.range
    # continuous pixel coordinates, shifted into the stored index convention
    us = (rng.ux - cloud.x.astype(np.float64)) / grid.sx - 0.5
    vs = (rng.uy - cloud.y.astype(np.float64)) / grid.sy - 0.5
    pixel_box = RotatedBox2D(
        cx2d=(rng.ux - box.x3d) / grid.sx - 0.5,
        cy2d=(rng.uy - box.y3d) / grid.sy - 0.5,
        dx2d=box.dx3d / grid.sx,
        dy2d=box.dy3d / grid.sy,
        theta2d=canonical_angle(box.theta3d),
    )
    inside = points_in_rotated_rect(us, vs, pixel_box)
    if not inside.any():
        raise NoSupportingPoints("no cloud points inside the detected footprint")
    zs = cloud.z[inside].astype(np.float64)
    z_min, z_max = float(zs.min()), float(zs.max())
    dz = z_max - z_min
    return replace(box, z3d=z_min + dz / 2, dz3d=dz)


def detect_frame(cloud: PointCloud, cfg: PipelineConfig, seg: SegmenterHandle) -> DetectionSet:
    """Full per-frame pipeline: raster, dilate, prompt, segment, filter, lift."""
    frame_id = cloud.frame_id
    if len(cloud) == 0:
        return DetectionSet(frame_id=frame_id, boxes=[])

    cropped = crop_to_range(cloud, cfg.grid.range)
    if len(cropped) == 0:
        return DetectionSet(frame_id=frame_id, boxes=[])
    normalized = normalize_intensity(cropped, cfg.intensity_mode)

    img = dilate(rasterize(normalized, cfg.grid, cfg.palette), cfg.grid.dilation_kernel)

    prompts = generate_grid(cfg.prompt_n, img.height, img.width)
    if cfg.prune:
        prompts = prune_prompts(prompts, img, cfg.prune_radius)

    masks = segment(seg, SegmentationRequest(image=img, prompts=prompts, multimask=cfg.multimask))
    if cfg.dedup:
        masks = dedup_masks(masks, cfg.dedup_iou)
    masks = filter_masks(masks, cfg.thresholds)

    boxes = []
    for m in masks:
        rect = min_area_rect(m)
        box = lift_box(rect, cfg.grid, score=m.score)
        try:
            boxes.append(vertical_attributes(box, cropped, cfg.grid))
        except NoSupportingPoints:
            continue
    return DetectionSet(frame_id=frame_id, boxes=boxes)


def load_detection_set(path: str | Path) -> DetectionSet:
    return DetectionSet.from_json(Path(path).read_text())


def save_detection_set(ds: DetectionSet, path: str | Path) -> None:
    Path(path).write_text(ds.to_json())
