"""Single-class AP / APH with BEV IoU matching and range filtering.

AP integrates the max-interpolated precision-recall curve:
AP = sum_i (R_i - R_{i-1}) * max{P_j : R_j >= R_i}. APH is identical except
each true positive contributes weight 1 - |wrapped heading error|/pi to the
precision numerator; recall steps are unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from .boxes import Box3D, DetectionSet
from .errors import FrameIdMismatch
from .geometry import rotated_iou


@dataclass(eq=False)
class MatchResult:
    pairs: list[tuple[int, int, float]] = field(default_factory=list)
    unmatched_dets: list[int] = field(default_factory=list)
    unmatched_gts: list[int] = field(default_factory=list)


@dataclass(eq=False)
class EvalReport:
    ap: float
    aph: float
    tp: int
    fp: int
    fn: int
    pr: list[tuple[float, float]] = field(default_factory=list)
    no_ground_truth: bool = False

    def to_dict(self) -> dict:
        d = {
            "ap": self.ap,
            "aph": self.aph,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "pr": [[r, p] for r, p in self.pr],
        }
        if self.no_ground_truth:
            d["warnings"] = ["no ground truth boxes; ap defined as 0"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def range_filter(boxes: Sequence[Box3D], max_dist: float) -> list[Box3D]:
    """Keep boxes with horizontal center distance strictly below max_dist."""
    if max_dist <= 0:
        raise ValueError(f"max_dist must be positive, got {max_dist}")
    return [b for b in boxes if math.hypot(b.x3d, b.y3d) < max_dist]


def heading_weight(theta_det: float, theta_gt: float) -> float:
    """1 - |heading error|/pi with the error wrapped into [-pi, pi]."""
    delta = math.remainder(theta_det - theta_gt, 2 * math.pi)
    return 1.0 - abs(delta) / math.pi


def match_detections(dets: DetectionSet, gts: DetectionSet, iou_thr: float) -> MatchResult:
    """Greedy score-ordered matching on BEV footprint IoU.

    Detections in descending score (ties: lower index); each claims the
    unmatched ground truth of highest IoU >= iou_thr (ties: lower GT index).
    """
    det_boxes, gt_boxes = dets.boxes, gts.boxes
    det_fp = [b.footprint() for b in det_boxes]
    gt_fp = [b.footprint() for b in gt_boxes]

    order = sorted(range(len(det_boxes)), key=lambda i: (-det_boxes[i].score, i))
    taken = [False] * len(gt_boxes)
    result = MatchResult()
    for di in order:
        best_gi, best_iou = -1, -1.0
        for gi in range(len(gt_boxes)):
            if taken[gi]:
                continue
            iou = rotated_iou(det_fp[di], gt_fp[gi])
            if iou >= iou_thr and iou > best_iou:
                best_gi, best_iou = gi, iou
        if best_gi >= 0:
            taken[best_gi] = True
            result.pairs.append((di, best_gi, best_iou))
        else:
            result.unmatched_dets.append(di)
    result.unmatched_gts = [gi for gi, t in enumerate(taken) if not t]
    result.pairs.sort()
    result.unmatched_dets.sort()
    return result


def _interpolated_area(recalls: list[float], precisions: list[float]) -> float:
    """Area under the max-to-the-right interpolated PR samples."""
    if not recalls:
        return 0.0
    running = 0.0
    best = [0.0] * len(precisions)
    for i in range(len(precisions) - 1, -1, -1):
        running = max(running, precisions[i])
        best[i] = running
    area = 0.0
    prev_r = 0.0
    for r, p in zip(recalls, best):
        if r > prev_r:
            area += (r - prev_r) * p
            prev_r = r
    return area


def _sweep(entries: list[tuple[float, int, bool, float]], n_gt: int) -> EvalReport:
    """entries: (score, stable order index, is_tp, heading weight)."""
    entries = sorted(entries, key=lambda e: (-e[0], e[1]))
    tp = fp = 0
    weighted_tp = 0.0
    recalls: list[float] = []
    precisions: list[float] = []
    precisions_h: list[float] = []
    for _, _, is_tp, weight in entries:
        if is_tp:
            tp += 1
            weighted_tp += weight
        else:
            fp += 1
        k = tp + fp
        recalls.append(tp / n_gt if n_gt else 0.0)
        precisions.append(tp / k)
        precisions_h.append(weighted_tp / k)

    no_gt = n_gt == 0
    ap = 0.0 if no_gt else _interpolated_area(recalls, precisions)
    aph = 0.0 if no_gt else _interpolated_area(recalls, precisions_h)
    return EvalReport(
        ap=ap,
        aph=aph,
        tp=tp,
        fp=fp,
        fn=n_gt - tp,
        pr=list(zip(recalls, precisions)),
        no_ground_truth=no_gt,
    )


def _frame_entries(dets: DetectionSet, gts: DetectionSet, iou_thr: float, base: int):
    match = match_detections(dets, gts, iou_thr)
    gt_theta = {di: gts.boxes[gi].theta3d for di, gi, _ in match.pairs}
    entries = []
    for di, box in enumerate(dets.boxes):
        if di in gt_theta:
            entries.append((box.score, base + di, True, heading_weight(box.theta3d, gt_theta[di])))
        else:
            entries.append((box.score, base + di, False, 0.0))
    return entries


def average_precision(dets: DetectionSet, gts: DetectionSet, iou_thr: float = 0.7) -> EvalReport:
    """Single-frame AP/APH; inputs are expected to be range-filtered already."""
    return _sweep(_frame_entries(dets, gts, iou_thr, 0), len(gts.boxes))


def evaluate_frames(
    det_sets: Sequence[DetectionSet],
    gt_sets: Sequence[DetectionSet],
    iou_thr: float = 0.7,
    max_dist: float = 30.0,
) -> EvalReport:
    """Multi-frame evaluation: range-filter, match per frame, pool one sweep."""
    det_by_id = {d.frame_id: d for d in det_sets}
    gt_by_id = {g.frame_id: g for g in gt_sets}
    if set(det_by_id) != set(gt_by_id):
        missing = set(gt_by_id) ^ set(det_by_id)
        raise FrameIdMismatch(f"frame ids differ between detections and ground truth: {sorted(missing)}")

    entries: list[tuple[float, int, bool, float]] = []
    n_gt = 0
    base = 0
    for frame_id in sorted(det_by_id):
        dets = DetectionSet(frame_id, range_filter(det_by_id[frame_id].boxes, max_dist))
        gts = DetectionSet(frame_id, range_filter(gt_by_id[frame_id].boxes, max_dist))
        entries.extend(_frame_entries(dets, gts, iou_thr, base))
        base += len(dets.boxes)
        n_gt += len(gts.boxes)
    return _sweep(entries, n_gt)
