"""FastAPI service wrapping the detection library.

Endpoints are pure given their payloads (plus the external exchange directory
for the external segmenter), so a long-lived instance can serve many clients.
Errors carry a machine-readable code the CLI maps onto its exit codes.
"""

from __future__ import annotations

import base64

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import metrics
from ..boxes import DetectionSet, detect_frame
from ..config import DEFAULTS, build_pipeline_config, resolve_config
from ..errors import (
    ConfigError,
    FrameIdMismatch,
    PlacementFailure,
    ProtocolError,
    SegmenterTimeout,
    SegmenterUnavailable,
)
from ..pointcloud import PointCloud, RECORD_BYTES
from ..raster import dilate, png_bytes, rasterize
from ..synth import SceneSpec, generate_scene, make_oracle
from ..masks import external_handle
from ..viz import draw_detections
from .models import (
    ConfigResolveRequest,
    DetectRequest,
    DetectResponse,
    DetectionSetModel,
    EvalReportModel,
    EvalRequest,
    RasterizeRequest,
    RasterizeResponse,
    SceneSpecModel,
    SynthRequest,
    SynthResponse,
)


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _decode_cloud(cloud_b64: str, frame_id: str) -> PointCloud:
    try:
        raw = base64.b64decode(cloud_b64)
    except Exception as exc:
        raise _error(400, "bad_request", f"invalid base64 cloud payload: {exc}")
    if len(raw) % RECORD_BYTES != 0:
        raise _error(400, "format_error", f"cloud byte length {len(raw)} not a multiple of {RECORD_BYTES}")
    arr = np.frombuffer(raw, dtype="<f4").reshape(-1, 4).copy()
    try:
        return PointCloud(arr, frame_id=frame_id)
    except ValueError as exc:
        raise _error(400, "bad_request", str(exc))


def _resolve(config: dict) -> dict:
    try:
        return resolve_config(None, config)
    except ConfigError as exc:
        raise _error(400, "config_error", str(exc))


def _pipeline(cfg: dict):
    try:
        return build_pipeline_config(cfg)
    except ConfigError as exc:
        raise _error(400, "config_error", str(exc))


def _scene_spec(model: SceneSpecModel) -> SceneSpec:
    try:
        return SceneSpec.from_dict(model.model_dump())
    except (ValueError, TypeError) as exc:
        raise _error(400, "bad_request", f"invalid scene spec: {exc}")


def _make_handle(req: DetectRequest, cfg, pipeline_cfg):
    seg = req.segmenter
    if seg.kind == "oracle":
        if seg.scene_spec is None:
            raise _error(400, "bad_request", "oracle segmenter needs scene_spec")
        scene = generate_scene(_scene_spec(seg.scene_spec))
        return make_oracle(scene, pipeline_cfg)
    try:
        return external_handle(
            seg.exchange_dir or "",
            timeout_s=seg.timeout_s if seg.timeout_s is not None else cfg["timeout_s"],
            poll_s=seg.poll_s if seg.poll_s is not None else cfg["poll_s"],
        )
    except SegmenterUnavailable as exc:
        raise _error(503, "segmenter_unavailable", str(exc))


def create_app() -> FastAPI:
    app = FastAPI(title="bevlift", version="0.1.0")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/config")
    def get_config() -> dict:
        return dict(DEFAULTS)

    @app.post("/config/resolve")
    def config_resolve(req: ConfigResolveRequest) -> dict:
        return _resolve(req.overrides)

    @app.post("/rasterize", response_model=RasterizeResponse)
    def do_rasterize(req: RasterizeRequest) -> RasterizeResponse:
        cfg = _resolve(req.config)
        pipeline_cfg = _pipeline(cfg)
        cloud = _decode_cloud(req.cloud_b64, frame_id="frame")
        from ..pointcloud import crop_to_range, normalize_intensity

        cropped = crop_to_range(cloud, pipeline_cfg.grid.range)
        if len(cropped):
            cropped = normalize_intensity(cropped, pipeline_cfg.intensity_mode)
        img = dilate(
            rasterize(cropped, pipeline_cfg.grid, pipeline_cfg.palette),
            pipeline_cfg.grid.dilation_kernel,
        )
        return RasterizeResponse(
            png_b64=base64.b64encode(png_bytes(img)).decode("ascii"),
            grid=pipeline_cfg.grid.sidecar_dict(),
            height=img.height,
            width=img.width,
        )

    @app.post("/detect", response_model=DetectResponse)
    def do_detect(req: DetectRequest) -> DetectResponse:
        cfg = _resolve(req.config)
        pipeline_cfg = _pipeline(cfg)
        cloud = _decode_cloud(req.cloud_b64, frame_id=req.frame_id)
        handle = _make_handle(req, cfg, pipeline_cfg)
        try:
            detections = detect_frame(cloud, pipeline_cfg, handle)
        except SegmenterTimeout as exc:
            raise _error(504, "segmenter_timeout", str(exc))
        except (SegmenterUnavailable, ProtocolError) as exc:
            raise _error(503, "segmenter_unavailable", str(exc))

        viz_b64 = None
        if req.viz:
            from ..pointcloud import crop_to_range, normalize_intensity
            from ..raster import BevImage

            cropped = crop_to_range(cloud, pipeline_cfg.grid.range)
            if len(cropped):
                cropped = normalize_intensity(cropped, pipeline_cfg.intensity_mode)
            img = dilate(
                rasterize(cropped, pipeline_cfg.grid, pipeline_cfg.palette),
                pipeline_cfg.grid.dilation_kernel,
            )
            burned = BevImage(draw_detections(img, detections), pipeline_cfg.grid)
            viz_b64 = base64.b64encode(png_bytes(burned)).decode("ascii")
        return DetectResponse(
            detections=DetectionSetModel(**detections.to_dict()), viz_png_b64=viz_b64
        )

    @app.post("/eval", response_model=EvalReportModel, response_model_exclude_none=True)
    def do_eval(req: EvalRequest) -> EvalReportModel:
        cfg = _resolve(req.config)
        try:
            dets = [DetectionSet.from_dict(m.model_dump()) for m in req.detections]
            gts = [DetectionSet.from_dict(m.model_dump()) for m in req.ground_truth]
        except ValueError as exc:
            raise _error(400, "bad_request", str(exc))
        try:
            report = metrics.evaluate_frames(dets, gts, iou_thr=cfg["iou_thr"], max_dist=cfg["max_dist"])
        except FrameIdMismatch as exc:
            raise _error(409, "frame_id_mismatch", str(exc))
        return EvalReportModel(**report.to_dict())

    @app.post("/synth", response_model=SynthResponse)
    def do_synth(req: SynthRequest) -> SynthResponse:
        spec = _scene_spec(req.spec)
        try:
            scene = generate_scene(spec)
        except PlacementFailure as exc:
            raise _error(409, "placement_failure", str(exc))
        payload = np.ascontiguousarray(scene.cloud.data, dtype="<f4").tobytes()
        return SynthResponse(
            cloud_b64=base64.b64encode(payload).decode("ascii"),
            ground_truth=DetectionSetModel(**scene.gt.to_dict()),
            spec_echo=spec.to_dict(),
        )

    return app


app = create_app()
