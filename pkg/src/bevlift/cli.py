"""Command-line client for the detection service.

The CLI keeps all file I/O local and drives the pipeline through the HTTP
service: an in-process instance by default, or a remote one via --server.
Exit codes: 0 ok, 2 I/O error, 3 config error, 4 segmenter unreachable or
timed out, 5 frame-id mismatch, 6 scene placement failure.
"""

from __future__ import annotations

import argparse
import base64
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import DEFAULTS, resolve_config
from .errors import BevliftError, ConfigError

EXIT_OK = 0
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_SEGMENTER = 4
EXIT_FRAME_MISMATCH = 5
EXIT_PLACEMENT = 6

_BINARY_EXTS = {".bin", ".xyzi", ".dat"}
_TEXT_EXTS = {".txt", ".csv", ".xyz"}

_ERROR_EXITS = {
    "config_error": EXIT_CONFIG,
    "segmenter_unavailable": EXIT_SEGMENTER,
    "segmenter_timeout": EXIT_SEGMENTER,
    "frame_id_mismatch": EXIT_FRAME_MISMATCH,
    "placement_failure": EXIT_PLACEMENT,
}


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


class ServiceClient:
    """Minimal JSON-over-HTTP client; local in-process or remote."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service.app import app

            self._client = TestClient(app, raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(path, json=payload)
        except Exception as exc:
            raise CliError(EXIT_IO, f"cannot reach service: {exc}")
        if resp.status_code >= 400:
            raise CliError(*_service_error(resp))
        return resp.json()


def _service_error(resp) -> tuple[int, str]:
    try:
        detail = resp.json().get("detail", {})
    except Exception:
        detail = {}
    if isinstance(detail, dict):
        code = detail.get("code", "")
        message = detail.get("message", resp.text)
    else:
        code, message = "", str(detail)
    return _ERROR_EXITS.get(code, EXIT_IO), f"service error ({code or resp.status_code}): {message}"


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}")


def _read_cloud_b64(path: Path, fmt: str | None) -> str:
    from .pointcloud import BINARY_XYZI, TEXT_XYZI, load_point_cloud
    import numpy as np

    if fmt is None:
        fmt = BINARY_XYZI if path.suffix.lower() in _BINARY_EXTS else (
            TEXT_XYZI if path.suffix.lower() in _TEXT_EXTS else BINARY_XYZI
        )
    try:
        cloud = load_point_cloud(path, fmt)
    except BevliftError as exc:
        raise CliError(EXIT_IO, str(exc))
    except ValueError as exc:
        raise CliError(EXIT_IO, f"{path}: {exc}")
    raw = np.ascontiguousarray(cloud.data, dtype="<f4").tobytes()
    return base64.b64encode(raw).decode("ascii")


def _override_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("config overrides (each overrides its config key)")
    sup = argparse.SUPPRESS
    for key in ("lx", "ux", "ly", "uy", "sx", "sy", "dedup_iou", "area_lo", "area_hi",
                "ratio_lo", "ratio_hi", "iou_thr", "max_dist", "timeout_s", "poll_s"):
        g.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float, default=sup)
    for key in ("dilation_kernel", "prompt_n", "prune_radius"):
        g.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int, default=sup)
    for key in ("prune", "dedup", "multimask"):
        g.add_argument(f"--{key}", dest=key, action=argparse.BooleanOptionalAction, default=sup)
    g.add_argument("--intensity-mode", dest="intensity_mode",
                   choices=["minmax_per_frame", "clip_unit"], default=sup)
    g.add_argument("--palette", dest="palette", default=sup)
    return p


def _collect_overrides(args: argparse.Namespace) -> dict:
    return {k: getattr(args, k) for k in DEFAULTS if hasattr(args, k)}


def _effective_config(args: argparse.Namespace) -> dict:
    return resolve_config(getattr(args, "config", None), _collect_overrides(args))


def build_parser() -> argparse.ArgumentParser:
    parent = _override_parent()
    parser = argparse.ArgumentParser(
        prog="bevlift",
        description="LiDAR bird's-eye-view detection pipeline client",
        parents=[parent],
    )
    parser.add_argument("--config", help="JSON config file with flat keys")
    parser.add_argument("--print-config", action="store_true",
                        help="print the effective config as JSON and exit")
    parser.add_argument("--server", help="remote service URL (default: in-process)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel frames for directory inputs")
    parser.add_argument("--viz", action="store_true", help="also write BEV PNGs with detection outlines")

    sub = parser.add_subparsers(dest="command")

    p_raster = sub.add_parser("rasterize", parents=[parent], help="point cloud -> BEV PNG + sidecar")
    p_raster.add_argument("input", help="point cloud file")
    p_raster.add_argument("--out", required=True, help="output PNG path")
    p_raster.add_argument("--format", choices=["binary_xyzi", "text_xyzi"], default=None)

    p_detect = sub.add_parser("detect", parents=[parent], help="run the detection pipeline")
    p_detect.add_argument("input", help="point cloud file or directory of frames")
    p_detect.add_argument("--out", required=True, help="output JSON path (file input) or directory")
    p_detect.add_argument("--segmenter", choices=["oracle", "external"], required=True)
    p_detect.add_argument("--scene", help="scene spec JSON (oracle segmenter)")
    p_detect.add_argument("--exchange-dir", help="file-exchange directory (external segmenter)")
    p_detect.add_argument("--format", choices=["binary_xyzi", "text_xyzi"], default=None)

    p_eval = sub.add_parser("eval", parents=[parent], help="score detections against ground truth")
    p_eval.add_argument("detections", help="detections JSON file or directory")
    p_eval.add_argument("ground_truth", help="ground-truth JSON file or directory")
    p_eval.add_argument("--out", help="also write the report JSON here")

    p_synth = sub.add_parser("synth", parents=[parent], help="generate a synthetic labeled scene")
    p_synth.add_argument("spec", help="scene spec JSON file")
    p_synth.add_argument("--out", required=True, help="output directory")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8400)

    return parser


def _load_json_file(path: Path, exit_code: int = EXIT_IO) -> dict:
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise CliError(exit_code, f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(exit_code, f"{path} is not valid JSON: {exc}")


def cmd_rasterize(args, client: ServiceClient) -> int:
    cfg = _effective_config(args)
    cloud_b64 = _read_cloud_b64(Path(args.input), args.format)
    body = client.post("/rasterize", {"cloud_b64": cloud_b64, "config": cfg})
    out = Path(args.out)
    _atomic_write(out, base64.b64decode(body["png_b64"]))
    from .raster import sidecar_path

    _atomic_write(sidecar_path(out), json.dumps(body["grid"]).encode())
    print(f"wrote {out} ({body['height']}x{body['width']})")
    return EXIT_OK


def _detect_inputs(args) -> list[Path]:
    src = Path(args.input)
    if src.is_dir():
        frames = sorted(
            p for p in src.iterdir()
            if p.is_file() and p.suffix.lower() in (_BINARY_EXTS | _TEXT_EXTS)
        )
        if not frames:
            raise CliError(EXIT_IO, f"no point cloud files in {src}")
        return frames
    if not src.exists():
        raise CliError(EXIT_IO, f"input {src} does not exist")
    return [src]


def cmd_detect(args, client: ServiceClient) -> int:
    cfg = _effective_config(args)
    segmenter: dict = {"kind": args.segmenter}
    if args.segmenter == "oracle":
        if not args.scene:
            raise CliError(EXIT_CONFIG, "--segmenter oracle requires --scene <spec.json>")
        segmenter["scene_spec"] = _load_json_file(Path(args.scene))
    else:
        if not args.exchange_dir:
            raise CliError(EXIT_SEGMENTER, "--segmenter external requires --exchange-dir")
        segmenter["exchange_dir"] = str(Path(args.exchange_dir).resolve())
        segmenter["timeout_s"] = cfg["timeout_s"]
        segmenter["poll_s"] = cfg["poll_s"]

    frames = _detect_inputs(args)
    multi = Path(args.input).is_dir()
    out = Path(args.out)

    def run_frame(path: Path) -> tuple[Path, dict]:
        payload = {
            "frame_id": path.stem,
            "cloud_b64": _read_cloud_b64(path, args.format),
            "segmenter": segmenter,
            "config": cfg,
            "viz": bool(args.viz),
        }
        return path, client.post("/detect", payload)

    results = []
    if args.jobs > 1 and len(frames) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_frame, frames))
    else:
        results = [run_frame(p) for p in frames]

    for path, body in results:
        target = out / f"{path.stem}.json" if multi else out
        _atomic_write(target, json.dumps(body["detections"]).encode())
        if args.viz and body.get("viz_png_b64"):
            viz_target = target.with_suffix(".viz.png")
            _atomic_write(viz_target, base64.b64decode(body["viz_png_b64"]))
        print(f"wrote {target} ({len(body['detections']['boxes'])} boxes)")
    return EXIT_OK


def _load_detection_sets(path: Path) -> list[dict]:
    if path.is_dir():
        files = sorted(path.glob("*.json"))
        if not files:
            raise CliError(EXIT_IO, f"no detection JSON files in {path}")
        return [_load_json_file(f) for f in files]
    if not path.exists():
        raise CliError(EXIT_IO, f"{path} does not exist")
    loaded = _load_json_file(path)
    return loaded if isinstance(loaded, list) else [loaded]


def cmd_eval(args, client: ServiceClient) -> int:
    cfg = _effective_config(args)
    body = client.post(
        "/eval",
        {
            "detections": _load_detection_sets(Path(args.detections)),
            "ground_truth": _load_detection_sets(Path(args.ground_truth)),
            "config": cfg,
        },
    )
    text = json.dumps(body, indent=2)
    print(text)
    if args.out:
        _atomic_write(Path(args.out), text.encode())
    return EXIT_OK


def cmd_synth(args, client: ServiceClient) -> int:
    spec = _load_json_file(Path(args.spec))
    body = client.post("/synth", {"spec": spec})
    out = Path(args.out)
    frame_id = body["ground_truth"]["frame_id"]
    _atomic_write(out / f"{frame_id}.bin", base64.b64decode(body["cloud_b64"]))
    _atomic_write(out / "gt.json", json.dumps(body["ground_truth"]).encode())
    _atomic_write(out / "scene.json", json.dumps(body["spec_echo"]).encode())
    print(f"wrote scene to {out} ({len(body['ground_truth']['boxes'])} objects)")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.print_config:
            from .config import effective_config_json

            print(effective_config_json(_effective_config(args)))
            return EXIT_OK
        if args.command is None:
            parser.print_help()
            return EXIT_OK
        if args.command == "serve":
            return cmd_serve(args)

        client = ServiceClient(args.server)
        handler = {
            "rasterize": cmd_rasterize,
            "detect": cmd_detect,
            "eval": cmd_eval,
            "synth": cmd_synth,
        }[args.command]
        return handler(args, client)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BevliftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
