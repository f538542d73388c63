"""Watch-directory request loop.

A request is a subdirectory of the watch dir holding request.json (with an
image path relative to that subdirectory). The worker answers by writing
response.json atomically (temp + rename); inference failures become
{"error": msg} responses instead of crashes. Re-delivered requests are
reprocessed and their responses overwritten.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from pathlib import Path

import numpy as np
from PIL import Image

from . import rle
from .backend import PredictorBackend, SamBackend
from .config import AdapterConfig


def _atomic_write(path: Path, payload: dict) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="response.", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh)
    os.replace(tmp, path)


def process_request(req_dir: Path, backend: PredictorBackend) -> dict:
    """Answer one request directory; returns the payload that was written."""
    req_dir = Path(req_dir)
    try:
        request = json.loads((req_dir / "request.json").read_text())
        image_path = req_dir / request["image"]
        image = np.asarray(Image.open(image_path).convert("RGB"), dtype=np.uint8)
        prompts = request["prompts"]
        multimask = bool(request.get("multimask", False))

        h, w = image.shape[:2]
        masks = []
        if prompts:
            backend.set_image(image)
        for index, (u, v) in enumerate(prompts):
            for bitmap, score in backend.predict(float(u), float(v), multimask):
                if bitmap.shape != (h, w):
                    raise ValueError(f"backend mask shape {bitmap.shape} != image {(h, w)}")
                if not bitmap.any():
                    continue
                masks.append(
                    {
                        "size": [h, w],
                        "counts": rle.encode(bitmap),
                        "score": float(min(max(score, 0.0), 1.0)),
                        "prompt_index": index,
                    }
                )
        payload = {"masks": masks}
    except Exception as exc:  # surfaced to the client as SegmenterUnavailable
        payload = {"error": f"{type(exc).__name__}: {exc}"}
    _atomic_write(req_dir / "response.json", payload)
    return payload


def pending_requests(watch_dir: Path) -> list[Path]:
    out = []
    for entry in sorted(Path(watch_dir).iterdir()):
        if entry.is_dir() and (entry / "request.json").exists() and not (entry / "response.json").exists():
            out.append(entry)
    return out


def serve(config: AdapterConfig, backend: PredictorBackend | None = None, once: bool = False) -> int:
    """Poll the watch directory forever (or one pass when once=True)."""
    if backend is None:
        backend = SamBackend(config.model_variant, str(config.checkpoint))
    config.watch_dir.mkdir(parents=True, exist_ok=True)
    processed = 0
    while True:
        for req_dir in pending_requests(config.watch_dir):
            process_request(req_dir, backend)
            processed += 1
        if once:
            return processed
        time.sleep(config.poll_s)
