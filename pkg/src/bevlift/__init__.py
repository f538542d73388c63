"""Zero-shot 3D vehicle detection from LiDAR point clouds.

The pipeline projects a cloud into a colorized bird's-eye-view raster, asks a
pluggable segmenter for foreground masks, filters them by area/aspect ratio,
and lifts the surviving masks into 7-DoF metric boxes.
"""

from .boxes import Box3D, DetectionSet, PipelineConfig, detect_frame, lift_box, vertical_attributes
from .filtering import FilterThresholds, filter_masks, mask_area, mask_aspect_ratio
from .geometry import RotatedBox2D, convex_hull, min_area_rect, point_in_rotated_rect, rotated_iou
from .masks import Mask, SegmentationRequest, SegmenterHandle, rle_decode, rle_encode, segment
from .metrics import EvalReport, average_precision, evaluate_frames, match_detections, range_filter
from .pointcloud import (
    Point,
    PointCloud,
    RangeSpec,
    crop_to_range,
    load_point_cloud,
    normalize_intensity,
    save_point_cloud,
)
from .prompts import PromptSet, generate_grid, prune_prompts
from .raster import BevImage, GridConfig, Palette, dilate, palette_lookup, project_point, rasterize
from .synth import LabeledScene, SceneSpec, generate_scene, make_oracle

__version__ = "0.1.0"

__all__ = [
    "Box3D",
    "BevImage",
    "DetectionSet",
    "EvalReport",
    "FilterThresholds",
    "GridConfig",
    "LabeledScene",
    "Mask",
    "Palette",
    "PipelineConfig",
    "Point",
    "PointCloud",
    "PromptSet",
    "RangeSpec",
    "RotatedBox2D",
    "SceneSpec",
    "SegmentationRequest",
    "SegmenterHandle",
    "average_precision",
    "convex_hull",
    "crop_to_range",
    "detect_frame",
    "dilate",
    "evaluate_frames",
    "filter_masks",
    "generate_grid",
    "generate_scene",
    "lift_box",
    "load_point_cloud",
    "make_oracle",
    "mask_area",
    "mask_aspect_ratio",
    "match_detections",
    "min_area_rect",
    "normalize_intensity",
    "palette_lookup",
    "point_in_rotated_rect",
    "project_point",
    "prune_prompts",
    "range_filter",
    "rasterize",
    "rle_decode",
    "rle_encode",
    "rotated_iou",
    "save_point_cloud",
    "segment",
    "vertical_attributes",
]
