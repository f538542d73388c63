"""Segmenter contract: RLE mask codec, request/handle types, the file-exchange
protocol client, per-prompt mask selection, and the optional IoU dedup pass.

RLE codec: row-major scan, counts alternate runs of 0s then 1s starting with
0s, so only the first count may be zero. This is also the wire format.
"""

from __future__ import annotations

import json
import os
import shutil
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import (
    LengthMismatch,
    NegativeCount,
    ProtocolError,
    SegmenterTimeout,
    SegmenterUnavailable,
)
from .prompts import PromptSet
from .raster import BevImage, save_bev_image

ORACLE = "oracle"
EXTERNAL = "external"

DEFAULT_TIMEOUT_S = 120.0
DEFAULT_POLL_S = 0.1


def rle_encode(bitmap: np.ndarray) -> np.ndarray:
    """Encode a boolean h x w bitmap as alternating 0-run/1-run counts."""
    flat = np.asarray(bitmap, dtype=bool).ravel()
    if flat.size == 0:
        raise ValueError("cannot encode an empty bitmap")
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    counts = np.diff(bounds)
    if flat[0]:
        counts = np.concatenate([[0], counts])
    return counts.astype(np.int64)


def rle_decode(rle: Sequence[int] | np.ndarray, h: int, w: int) -> np.ndarray:
    """Inverse of rle_encode; validates counts before expanding."""
    counts = np.asarray(rle, dtype=np.int64).ravel()
    if counts.size and counts.min() < 0:
        raise NegativeCount("negative run count")
    total = int(counts.sum())
    if total != h * w:
        raise LengthMismatch(f"counts sum to {total}, expected {h * w}")
    values = np.zeros(counts.size, dtype=bool)
    values[1::2] = True
    return np.repeat(values, counts).reshape(h, w)


@dataclass(eq=False)
class Mask:
    """Run-length encoded binary mask with a confidence score."""

    h: int
    w: int
    rle: np.ndarray
    score: float
    prompt_index: int = -1

    def __post_init__(self):
        counts = np.asarray(self.rle, dtype=np.int64).ravel()
        if counts.size == 0:
            raise ValueError("mask needs at least one run count")
        if counts.min() < 0:
            raise NegativeCount("negative run count")
        if counts.size > 1 and counts[1:].min() == 0:
            raise ValueError("only the first RLE count may be zero")
        if int(counts.sum()) != self.h * self.w:
            raise LengthMismatch(f"counts sum to {int(counts.sum())}, expected {self.h * self.w}")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")
        self.rle = counts

    def decode(self) -> np.ndarray:
        return rle_decode(self.rle, self.h, self.w)

    @property
    def area(self) -> int:
        return int(self.rle[1::2].sum())


@dataclass(eq=False)
class SegmentationRequest:
    image: BevImage | str | Path
    prompts: PromptSet
    multimask: bool = True

    def image_size(self) -> tuple[int, int]:
        if isinstance(self.image, BevImage):
            return self.image.height, self.image.width
        from .raster import load_bev_image

        img = load_bev_image(self.image)
        return img.height, img.width


@dataclass(eq=False)
class SegmenterHandle:
    """Either the in-process oracle or a file-exchange session directory."""

    kind: str
    oracle: Callable[[SegmentationRequest], list] | None = None
    exchange_dir: Path | None = None
    timeout_s: float = DEFAULT_TIMEOUT_S
    poll_s: float = DEFAULT_POLL_S
    _counter: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        if self.kind not in (ORACLE, EXTERNAL):
            raise ValueError(f"unknown segmenter kind {self.kind!r}")
        if self.kind == ORACLE and self.oracle is None:
            raise ValueError("oracle handle needs a callable")
        if self.kind == EXTERNAL:
            if self.exchange_dir is None:
                raise SegmenterUnavailable("external handle needs an exchange directory")
            self.exchange_dir = Path(self.exchange_dir)
            if not self.exchange_dir.is_dir():
                raise SegmenterUnavailable(f"exchange directory {self.exchange_dir} not reachable")


def oracle_handle(fn: Callable[[SegmentationRequest], list]) -> SegmenterHandle:
    return SegmenterHandle(kind=ORACLE, oracle=fn)


def external_handle(
    exchange_dir: str | Path,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    poll_s: float = DEFAULT_POLL_S,
) -> SegmenterHandle:
    return SegmenterHandle(
        kind=EXTERNAL, exchange_dir=Path(exchange_dir), timeout_s=timeout_s, poll_s=poll_s
    )


def _parse_response(payload: dict, h: int, w: int) -> list[Mask]:
    if "error" in payload:
        raise SegmenterUnavailable(f"segmenter reported: {payload['error']}")
    try:
        masks = []
        for entry in payload["masks"]:
            mh, mw = entry["size"]
            if (int(mh), int(mw)) != (h, w):
                raise ProtocolError(f"mask size {(mh, mw)} does not match image {(h, w)}")
            masks.append(
                Mask(
                    h=int(mh),
                    w=int(mw),
                    rle=np.asarray(entry["counts"], dtype=np.int64),
                    score=float(entry["score"]),
                    prompt_index=int(entry["prompt_index"]),
                )
            )
        return masks
    except ProtocolError:
        raise
    except (KeyError, TypeError, ValueError, LengthMismatch, NegativeCount) as exc:
        raise ProtocolError(f"malformed segmenter response: {exc}") from exc


def _exchange_request(handle: SegmenterHandle, req: SegmentationRequest) -> list[Mask]:
    with handle._lock:  # one in-flight request per session
        handle._counter += 1
        req_dir = handle.exchange_dir / f"req-{handle._counter:06d}"
        req_dir.mkdir(parents=True, exist_ok=True)

        image_name = "image.png"
        if isinstance(req.image, BevImage):
            save_bev_image(req.image, req_dir / image_name)
        else:
            shutil.copyfile(req.image, req_dir / image_name)
        request = {
            "image": image_name,
            "prompts": [[float(u), float(v)] for u, v in req.prompts.coords],
            "multimask": bool(req.multimask),
        }
        tmp = req_dir / "request.json.tmp"
        tmp.write_text(json.dumps(request))
        os.replace(tmp, req_dir / "request.json")

        response_path = req_dir / "response.json"
        deadline = time.monotonic() + handle.timeout_s
        while not response_path.exists():
            if time.monotonic() >= deadline:
                raise SegmenterTimeout(
                    f"no response in {req_dir} within {handle.timeout_s:.1f}s"
                )
            time.sleep(handle.poll_s)
        try:
            payload = json.loads(response_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"unreadable response in {req_dir}: {exc}") from exc
    h, w = req.image_size()
    return _parse_response(payload, h, w)


def _select_best_per_prompt(masks: list[Mask]) -> list[Mask]:
    """Keep the highest-score mask per prompt_index (tie: earliest position)."""
    best: dict[int, tuple[float, int]] = {}
    for pos, m in enumerate(masks):
        cur = best.get(m.prompt_index)
        if cur is None or m.score > cur[0]:
            best[m.prompt_index] = (m.score, pos)
    keep = sorted(pos for _, pos in best.values())
    return [masks[pos] for pos in keep]


def segment(handle: SegmenterHandle, req: SegmentationRequest) -> list[Mask]:
    """Run the segmenter; returns per-prompt best masks, empties discarded."""
    if len(req.prompts):
        h, w = req.image_size()
        coords = req.prompts.coords
        if (
            coords[:, 0].min() < 0
            or coords[:, 0].max() >= h
            or coords[:, 1].min() < 0
            or coords[:, 1].max() >= w
        ):
            raise ValueError("prompts outside image bounds")
    if handle.kind == ORACLE:
        masks = list(handle.oracle(req))
        h, w = req.image_size()
        for m in masks:
            if (m.h, m.w) != (h, w):
                raise ProtocolError(f"oracle mask size {(m.h, m.w)} != image {(h, w)}")
    else:
        masks = _exchange_request(handle, req)
    masks = _select_best_per_prompt(masks)
    return [m for m in masks if m.area > 0]


def mask_iou(a: Mask, b: Mask) -> float:
    """Pixel IoU of two masks of the same size."""
    ba, bb = a.decode(), b.decode()
    inter = int(np.logical_and(ba, bb).sum())
    union = int(np.logical_or(ba, bb).sum())
    return inter / union if union else 0.0


def dedup_masks(masks: Sequence[Mask], iou_thr: float = 0.8) -> list[Mask]:
    """Greedy IoU suppression, higher score wins (tie: earlier position)."""
    order = sorted(range(len(masks)), key=lambda i: (-masks[i].score, i))
    kept: list[int] = []
    bitmaps = {}
    for i in order:
        bi = bitmaps.setdefault(i, masks[i].decode())
        duplicate = False
        for j in kept:
            bj = bitmaps[j]
            inter = int(np.logical_and(bi, bj).sum())
            union = int(np.logical_or(bi, bj).sum())
            if union and inter / union >= iou_thr:
                duplicate = True
                break
        if not duplicate:
            kept.append(i)
    return [masks[i] for i in sorted(kept)]
