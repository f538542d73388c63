"""Deterministic synthetic LiDAR scenes with ground truth, plus the oracle
segmenter that closes the verification loop without any learned model.

Cars are cuboids sitting on the ground plane: points are sampled on the four
vertical faces and the roof. Ground points cover the whole range at z=0;
clutter blobs are small cuboids whose footprints fail the vehicle area band.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
import numpy as np

from .boxes import Box3D, DetectionSet, PipelineConfig
from .errors import PlacementFailure
from .geometry import convex_polygon_distance
from .masks import Mask, SegmentationRequest, SegmenterHandle, oracle_handle, rle_encode
from .pointcloud import PointCloud, RangeSpec
from .prompts import round_half_up
from .raster import GridConfig, project_points, window_max

MASK64 = (1 << 64) - 1


class SplitMix64:
    """Seedable 64-bit PRNG with a fixed, portable state update.

    Each draw advances the state by the golden-gamma constant and mixes it:

        state = (state + 0x9E3779B97F4A7C15) mod 2^64
        z = state
        z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
        z = (z XOR (z >> 27)) * 0x94D049BB133111EB mod 2^64
        output = z XOR (z >> 31)

    Uniform doubles take the top 53 bits: output >> 11, scaled by 2^-53.
    Reimplementations in any language reproduce the same stream bit-exactly.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def uniforms(self, lo: float, hi: float, n: int) -> np.ndarray:
        return np.array([self.uniform(lo, hi) for _ in range(n)], dtype=np.float64)


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of a synthetic scene; defaults target the vehicle filter band."""

    seed: int = 1
    n_cars: int = 8
    car_length: tuple[float, float] = (3.5, 5.0)
    car_width: tuple[float, float] = (1.6, 2.0)
    car_height: tuple[float, float] = (1.4, 1.8)
    min_gap: float = 1.5
    surface_density: float = 60.0  # points per m^2 on faces and roof
    ground_density: float = 0.05  # points per m^2 at z=0 (sparse scene)
    clutter_count: int = 12
    clutter_size: tuple[float, float] = (0.2, 0.8)
    intensity_car: tuple[float, float] = (0.6, 0.9)
    intensity_ground: tuple[float, float] = (0.05, 0.2)
    intensity_clutter: tuple[float, float] = (0.2, 0.5)
    range: RangeSpec = field(default_factory=lambda: RangeSpec(-30.0, 30.0, -30.0, 30.0))

    def __post_init__(self):
        if self.surface_density <= 0 or self.ground_density <= 0:
            raise ValueError("densities must be positive")
        if self.min_gap < 0:
            raise ValueError("min_gap must be >= 0")
        if self.n_cars < 0 or self.clutter_count < 0:
            raise ValueError("counts must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["range"] = {"lx": self.range.lx, "ux": self.range.ux, "ly": self.range.ly, "uy": self.range.uy}
        for key in (
            "car_length",
            "car_width",
            "car_height",
            "clutter_size",
            "intensity_car",
            "intensity_ground",
            "intensity_clutter",
        ):
            d[key] = list(d[key])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        d = dict(d)
        if "range" in d:
            r = d["range"]
            d["range"] = RangeSpec(r["lx"], r["ux"], r["ly"], r["uy"])
        for key in (
            "car_length",
            "car_width",
            "car_height",
            "clutter_size",
            "intensity_car",
            "intensity_ground",
            "intensity_clutter",
        ):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        return cls.from_dict(json.loads(text))


@dataclass(eq=False)
class LabeledScene:
    cloud: PointCloud
    gt: DetectionSet
    object_points: list[np.ndarray]  # per-car index arrays into cloud.data
    spec: SceneSpec


def _footprint_corners(cx: float, cy: float, length: float, width: float, heading: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    d = np.array([c, s]) * (length / 2)
    o = np.array([-s, c]) * (width / 2)
    center = np.array([cx, cy])
    return np.stack([center + d + o, center - d + o, center - d - o, center + d - o])


MAX_PLACEMENT_ATTEMPTS = 10_000


def _place_footprints(rng: SplitMix64, spec: SceneSpec):
    """Rejection-sample car poses honoring the pairwise edge gap."""
    placed = []  # (cx, cy, L, W, H, heading, corners)
    attempts = 0
    for _ in range(spec.n_cars):
        L = rng.uniform(*spec.car_length)
        W = rng.uniform(*spec.car_width)
        H = rng.uniform(*spec.car_height)
        half_diag = math.hypot(L, W) / 2
        while True:
            attempts += 1
            if attempts > MAX_PLACEMENT_ATTEMPTS:
                raise PlacementFailure(
                    f"could not place {spec.n_cars} cars with min_gap {spec.min_gap}"
                )
            cx = rng.uniform(spec.range.lx + half_diag, spec.range.ux - half_diag)
            cy = rng.uniform(spec.range.ly + half_diag, spec.range.uy - half_diag)
            heading = math.pi / 2 - rng.random() * math.pi  # uniform over (-pi/2, pi/2]
            corners = _footprint_corners(cx, cy, L, W, heading)
            if all(
                convex_polygon_distance(corners, other[6]) >= spec.min_gap for other in placed
            ):
                placed.append((cx, cy, L, W, H, heading, corners))
                break
    return placed


def _car_points(rng: SplitMix64, cx, cy, L, W, H, heading, density, band) -> np.ndarray:
    """Points on the roof and the four vertical faces, with band intensities."""
    c, s = math.cos(heading), math.sin(heading)

    def to_world(local_x, local_y):
        return cx + local_x * c - local_y * s, cy + local_x * s + local_y * c

    chunks = []

    def surface(count, make_local):
        if count < 1:
            count = 1
        pts = np.empty((count, 4))
        for i in range(count):
            lx, ly, z = make_local(rng.random(), rng.random())
            wx, wy = to_world(lx, ly)
            pts[i] = (wx, wy, z, rng.uniform(*band))
        chunks.append(pts)

    surface(round(L * W * density), lambda a, b: ((a - 0.5) * L, (b - 0.5) * W, H))
    surface(round(L * H * density), lambda a, b: ((a - 0.5) * L, -W / 2, b * H))
    surface(round(L * H * density), lambda a, b: ((a - 0.5) * L, W / 2, b * H))
    surface(round(W * H * density), lambda a, b: (-L / 2, (a - 0.5) * W, b * H))
    surface(round(W * H * density), lambda a, b: (L / 2, (a - 0.5) * W, b * H))
    return np.concatenate(chunks, axis=0)


def generate_scene(spec: SceneSpec) -> LabeledScene:
    """Deterministic scene for a given spec: same seed, bit-identical output."""
    rng = SplitMix64(spec.seed)
    placed = _place_footprints(rng, spec)

    chunks: list[np.ndarray] = []
    object_points: list[np.ndarray] = []
    boxes: list[Box3D] = []
    offset = 0
    for cx, cy, L, W, H, heading, _corners in placed:
        pts = _car_points(rng, cx, cy, L, W, H, heading, spec.surface_density, spec.intensity_car)
        chunks.append(pts)
        object_points.append(np.arange(offset, offset + len(pts)))
        offset += len(pts)
        boxes.append(
            Box3D(x3d=cx, y3d=cy, z3d=H / 2, dx3d=L, dy3d=W, dz3d=H, theta3d=heading, score=1.0)
        )

    rng_area = (spec.range.ux - spec.range.lx) * (spec.range.uy - spec.range.ly)
    n_ground = max(0, round(rng_area * spec.ground_density))
    if n_ground:
        pts = np.empty((n_ground, 4))
        for i in range(n_ground):
            pts[i] = (
                rng.uniform(spec.range.lx, spec.range.ux),
                rng.uniform(spec.range.ly, spec.range.uy),
                0.0,
                rng.uniform(*spec.intensity_ground),
            )
        chunks.append(pts)
        offset += n_ground

    attempts = 0
    for _ in range(spec.clutter_count):
        side = rng.uniform(*spec.clutter_size)
        height = rng.uniform(0.3, 1.5)
        while True:
            attempts += 1
            if attempts > MAX_PLACEMENT_ATTEMPTS:
                raise PlacementFailure("could not place clutter with min_gap from cars")
            bx = rng.uniform(spec.range.lx + side, spec.range.ux - side)
            by = rng.uniform(spec.range.ly + side, spec.range.uy - side)
            corners = _footprint_corners(bx, by, side, side, 0.0)
            if all(
                convex_polygon_distance(corners, car[6]) >= spec.min_gap for car in placed
            ):
                break
        n_pts = max(8, round(side * side * height * 120))
        pts = np.empty((n_pts, 4))
        for i in range(n_pts):
            pts[i] = (
                bx + (rng.random() - 0.5) * side,
                by + (rng.random() - 0.5) * side,
                rng.random() * height,
                rng.uniform(*spec.intensity_clutter),
            )
        chunks.append(pts)
        offset += n_pts

    data = np.concatenate(chunks, axis=0) if chunks else np.empty((0, 4))
    cloud = PointCloud(data.astype(np.float32), frame_id=f"synth-{spec.seed}")
    gt = DetectionSet(frame_id=cloud.frame_id, boxes=boxes)
    return LabeledScene(cloud=cloud, gt=gt, object_points=object_points, spec=spec)


def car_footprint_bitmaps(scene: LabeledScene, grid: GridConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-car (occupancy, dilated occupancy) bitmaps on the given grid."""
    h, w = grid.height, grid.width
    bitmaps = []
    for idx in scene.object_points:
        occ = np.zeros((h, w), dtype=np.uint8)
        xs = scene.cloud.x[idx]
        ys = scene.cloud.y[idx]
        cx, cy = project_points(xs, ys, grid)
        occ[cx, cy] = 1
        dilated = window_max(occ, grid.dilation_kernel) if grid.dilation_kernel > 1 else occ
        bitmaps.append((occ.astype(bool), dilated.astype(bool)))
    return bitmaps


def make_oracle(scene: LabeledScene, cfg: PipelineConfig) -> SegmenterHandle:
    """Ground-truth-backed segmenter.

    A prompt whose rounded pixel lies inside a car's dilated footprint gets
    that car's rasterized footprint back (score 1.0); ground and clutter
    prompts get nothing. The returned mask is the undilated occupancy so
    lifted boxes carry only digitization error, not the dilation ring.
    """
    grid = cfg.grid
    bitmaps = car_footprint_bitmaps(scene, grid)
    rles = [rle_encode(occ) for occ, _ in bitmaps]
    h, w = grid.height, grid.width

    def oracle(req: SegmentationRequest) -> list[Mask]:
        masks = []
        if len(req.prompts) == 0:
            return masks
        ru = np.clip(round_half_up(req.prompts.coords[:, 0]), 0, h - 1)
        rv = np.clip(round_half_up(req.prompts.coords[:, 1]), 0, w - 1)
        for i in range(len(req.prompts)):
            for k, (_occ, hit_region) in enumerate(bitmaps):
                if hit_region[ru[i], rv[i]]:
                    masks.append(Mask(h=h, w=w, rle=rles[k].copy(), score=1.0, prompt_index=i))
                    break
        return masks

    return oracle_handle(oracle)
