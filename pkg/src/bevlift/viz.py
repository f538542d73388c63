"""Burn detection outlines into a BEV image for quick visual checks."""

from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

from .boxes import DetectionSet
from .geometry import RotatedBox2D, box_corners, canonical_angle
from .raster import BevImage, GridConfig


def _pixel_footprint(box, grid: GridConfig) -> RotatedBox2D:
    rng = grid.range
    return RotatedBox2D(
        cx2d=(rng.ux - box.x3d) / grid.sx - 0.5,
        cy2d=(rng.uy - box.y3d) / grid.sy - 0.5,
        dx2d=box.dx3d / grid.sx,
        dy2d=box.dy3d / grid.sy,
        theta2d=canonical_angle(box.theta3d),
    )


def draw_detections(img: BevImage, dets: DetectionSet, color=(255, 255, 255)) -> np.ndarray:
    """Return a copy of the raster with rotated-box outlines drawn on it."""
    pil = Image.fromarray(img.pixels, mode="RGB")
    draw = ImageDraw.Draw(pil)
    for box in dets.boxes:
        corners = box_corners(_pixel_footprint(box, img.grid))
        # PIL expects (x, y) = (column, row)
        ring = [(float(v) + 0.5, float(u) + 0.5) for u, v in corners]
        draw.polygon(ring, outline=color)
    return np.asarray(pil, dtype=np.uint8)
