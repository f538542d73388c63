"""Pydantic request/response schemas for the HTTP service.

Box and report payloads mirror the on-disk JSON formats exactly, so a service
response body can be written to disk as-is by the CLI.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class BoxModel(BaseModel):
    x: float
    y: float
    z: float
    dx: float
    dy: float
    dz: float
    theta: float
    score: float = 1.0


class DetectionSetModel(BaseModel):
    frame_id: str
    boxes: list[BoxModel] = Field(default_factory=list)


class RangeModel(BaseModel):
    lx: float
    ux: float
    ly: float
    uy: float


class SceneSpecModel(BaseModel):
    seed: int = 1
    n_cars: int = 8
    car_length: tuple[float, float] = (3.5, 5.0)
    car_width: tuple[float, float] = (1.6, 2.0)
    car_height: tuple[float, float] = (1.4, 1.8)
    min_gap: float = 1.5
    surface_density: float = 60.0
    ground_density: float = 0.05
    clutter_count: int = 12
    clutter_size: tuple[float, float] = (0.2, 0.8)
    intensity_car: tuple[float, float] = (0.6, 0.9)
    intensity_ground: tuple[float, float] = (0.05, 0.2)
    intensity_clutter: tuple[float, float] = (0.2, 0.5)
    range: RangeModel = Field(default_factory=lambda: RangeModel(lx=-30.0, ux=30.0, ly=-30.0, uy=30.0))


class SegmenterModel(BaseModel):
    kind: Literal["oracle", "external"]
    scene_spec: Optional[SceneSpecModel] = None  # oracle: regenerate the labeled scene
    exchange_dir: Optional[str] = None  # external: file-exchange directory
    timeout_s: Optional[float] = None
    poll_s: Optional[float] = None


class ConfigResolveRequest(BaseModel):
    overrides: dict = Field(default_factory=dict)


class RasterizeRequest(BaseModel):
    cloud_b64: str  # binary_xyzi records, base64
    config: dict = Field(default_factory=dict)


class RasterizeResponse(BaseModel):
    png_b64: str
    grid: dict
    height: int
    width: int


class DetectRequest(BaseModel):
    frame_id: str
    cloud_b64: str
    segmenter: SegmenterModel
    config: dict = Field(default_factory=dict)
    viz: bool = False


class DetectResponse(BaseModel):
    detections: DetectionSetModel
    viz_png_b64: Optional[str] = None


class EvalRequest(BaseModel):
    detections: list[DetectionSetModel]
    ground_truth: list[DetectionSetModel]
    config: dict = Field(default_factory=dict)


class EvalReportModel(BaseModel):
    ap: float
    aph: float
    tp: int
    fp: int
    fn: int
    pr: list[tuple[float, float]] = Field(default_factory=list)
    warnings: Optional[list[str]] = None


class SynthRequest(BaseModel):
    spec: SceneSpecModel


class SynthResponse(BaseModel):
    cloud_b64: str
    ground_truth: DetectionSetModel
    spec_echo: dict
