"""Exact 2D geometry kernels.

Convex hull (monotone chain), minimum-area rotated rectangle (rotating
calipers over the hull), rotated-rectangle IoU (Sutherland-Hodgman clipping +
shoelace areas), and point-in-rotated-rectangle tests.

Pixel masks are measured through their unit-square footprints: every true
pixel (r, c) contributes corners (r, c), (r+1, c), (r, c+1), (r+1, c+1) in
continuous coordinates, so an n x m filled block measures exactly n x m. The
resulting rectangle is stored in index convention (continuous center - 0.5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, EmptyMask
from .masks import Mask, rle_decode

HALF_PI = math.pi / 2


def canonical_angle(theta: float) -> float:
    """Wrap an angle into (-pi/2, pi/2] (rectangle headings live mod pi)."""
    r = math.remainder(theta, math.pi)
    if r <= -HALF_PI:
        r += math.pi
    elif r > HALF_PI:
        r -= math.pi
    return r


@dataclass(frozen=True)
class RotatedBox2D:
    """5-DoF image-plane box: center (index convention), side lengths, heading.

    theta2d is the direction angle of the dx2d side, measured from the row
    axis toward the column axis, canonicalized into (-pi/2, pi/2].
    """

    cx2d: float
    cy2d: float
    dx2d: float
    dy2d: float
    theta2d: float

    def __post_init__(self):
        if self.dx2d <= 0 or self.dy2d <= 0:
            raise ValueError(f"box sides must be positive (got {self.dx2d}, {self.dy2d})")
        if not (-HALF_PI < self.theta2d <= HALF_PI + 1e-12):
            raise ValueError(f"theta2d {self.theta2d} outside (-pi/2, pi/2]")

    @property
    def area(self) -> float:
        return self.dx2d * self.dy2d


@dataclass(frozen=True)
class Polygon2D:
    """Simple CCW polygon; degenerate flags hulls that collapsed to <3 vertices."""

    vertices: tuple
    degenerate: bool = False

    def __post_init__(self):
        if not self.degenerate and len(self.vertices) < 3:
            raise ValueError("non-degenerate polygon needs >= 3 vertices")
        object.__setattr__(self, "vertices", tuple((float(u), float(v)) for u, v in self.vertices))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> Polygon2D:
    """Monotone-chain hull, counter-clockwise, collinear points excluded.

    All-collinear inputs come back as a degenerate polygon holding the two
    extreme points (one point when the input is a single location).
    """
    pts = sorted({(float(p[0]), float(p[1])) for p in np.asarray(points).reshape(-1, 2)})
    if not pts:
        raise EmptyInput("convex hull of zero points")
    if len(pts) == 1:
        return Polygon2D((pts[0],), degenerate=True)

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return Polygon2D((pts[0], pts[-1]), degenerate=True)
    return Polygon2D(tuple(hull))


def _min_rect_from_hull(hull: np.ndarray) -> tuple[float, float, float, float, float]:
    """Rotating calipers over a CCW hull; returns (cu, cv, long, short, theta).

    theta is the direction of the longer side; exact squares take the
    representation whose angle lies in (-pi/4, pi/4].
    """
    edges = np.roll(hull, -1, axis=0) - hull
    lens = np.hypot(edges[:, 0], edges[:, 1])
    keep = lens > 0
    dirs = edges[keep] / lens[keep, None]
    orthos = np.stack([-dirs[:, 1], dirs[:, 0]], axis=1)

    proj_p = dirs @ hull.T
    proj_o = orthos @ hull.T
    min_p, max_p = proj_p.min(axis=1), proj_p.max(axis=1)
    min_o, max_o = proj_o.min(axis=1), proj_o.max(axis=1)
    len_p = max_p - min_p
    len_o = max_o - min_o
    i = int(np.argmin(len_p * len_o))

    mid = 0.5 * (min_p[i] + max_p[i]) * dirs[i] + 0.5 * (min_o[i] + max_o[i]) * orthos[i]
    phi = math.atan2(dirs[i, 1], dirs[i, 0])
    lp, lo = float(len_p[i]), float(len_o[i])
    if lp > lo:
        theta, long_side, short_side = canonical_angle(phi), lp, lo
    elif lo > lp:
        theta, long_side, short_side = canonical_angle(phi + HALF_PI), lo, lp
    else:
        t1, t2 = canonical_angle(phi), canonical_angle(phi + HALF_PI)
        theta = t1 if -math.pi / 4 < t1 <= math.pi / 4 else t2
        long_side = short_side = lp
    return float(mid[0]), float(mid[1]), long_side, short_side, theta


def mask_corner_points(mask: Mask) -> np.ndarray:
    """Unique unit-square corner coordinates of a mask's true pixels."""
    bitmap = rle_decode(mask.rle, mask.h, mask.w)
    rows, cols = np.nonzero(bitmap)
    if rows.size == 0:
        raise EmptyMask("mask has no foreground pixels")
    r = np.concatenate([rows, rows + 1, rows, rows + 1])
    c = np.concatenate([cols, cols, cols + 1, cols + 1])
    flat = r.astype(np.int64) * (mask.w + 2) + c
    uniq = np.unique(flat)
    return np.stack([uniq // (mask.w + 2), uniq % (mask.w + 2)], axis=1).astype(np.float64)


def min_area_rect(mask: Mask) -> RotatedBox2D:
    """Minimum-area rotated rectangle enclosing a mask's pixel footprint."""
    corners = mask_corner_points(mask)
    hull = convex_hull(corners)
    if hull.degenerate:
        # unreachable for pixel footprints (unit squares always span 2D)
        raise EmptyMask("degenerate mask footprint")
    cu, cv, long_side, short_side, theta = _min_rect_from_hull(np.asarray(hull.vertices))
    return RotatedBox2D(cu - 0.5, cv - 0.5, long_side, short_side, theta)


def box_corners(box: RotatedBox2D) -> np.ndarray:
    """CCW corner coordinates of a rotated box, in the box's own frame units."""
    c, s = math.cos(box.theta2d), math.sin(box.theta2d)
    d = np.array([c, s]) * (box.dx2d / 2)
    o = np.array([-s, c]) * (box.dy2d / 2)
    center = np.array([box.cx2d, box.cy2d])
    return np.stack([center + d + o, center - d + o, center - d - o, center + d - o])


def _shoelace(poly: np.ndarray) -> float:
    u, v = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(u, np.roll(v, -1)) - np.dot(v, np.roll(u, -1)))


def _clip_halfplane(poly: list, a, b) -> list:
    """Keep the part of poly on the left of (and on) the directed line a->b."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        pin = _cross(a, b, p) >= 0.0
        qin = _cross(a, b, q) >= 0.0
        if pin:
            out.append(p)
        if pin != qin:
            # intersection of segment pq with line ab
            du, dv = b[0] - a[0], b[1] - a[1]
            eu, ev = q[0] - p[0], q[1] - p[1]
            denom = du * ev - dv * eu
            t = (du * (a[1] - p[1]) - dv * (a[0] - p[0])) / denom
            out.append((p[0] + t * eu, p[1] + t * ev))
    return out


def rotated_iou(a: RotatedBox2D, b: RotatedBox2D) -> float:
    """Intersection-over-union of two rotated rectangles via polygon clipping."""
    pa = [tuple(p) for p in box_corners(a)]
    pb = box_corners(b)
    poly = pa
    for i in range(4):
        if len(poly) < 3:
            break
        poly = _clip_halfplane(poly, tuple(pb[i]), tuple(pb[(i + 1) % 4]))
    inter = _shoelace(np.asarray(poly)) if len(poly) >= 3 else 0.0
    inter = max(inter, 0.0)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def point_in_rotated_rect(p, box: RotatedBox2D, eps: float = 1e-9) -> bool:
    """Boundary-inclusive containment of a point in a rotated rectangle."""
    c, s = math.cos(box.theta2d), math.sin(box.theta2d)
    du = float(p[0]) - box.cx2d
    dv = float(p[1]) - box.cy2d
    along = du * c + dv * s
    across = -du * s + dv * c
    return abs(along) <= box.dx2d / 2 + eps and abs(across) <= box.dy2d / 2 + eps


def points_in_rotated_rect(us: np.ndarray, vs: np.ndarray, box: RotatedBox2D, eps: float = 1e-9) -> np.ndarray:
    """Vectorized boundary-inclusive containment test."""
    c, s = math.cos(box.theta2d), math.sin(box.theta2d)
    du = us - box.cx2d
    dv = vs - box.cy2d
    along = du * c + dv * s
    across = -du * s + dv * c
    return (np.abs(along) <= box.dx2d / 2 + eps) & (np.abs(across) <= box.dy2d / 2 + eps)


def _point_in_convex(p, poly: np.ndarray) -> bool:
    """Containment in a convex polygon of either orientation."""
    n = len(poly)
    signs = [_cross(tuple(poly[i]), tuple(poly[(i + 1) % n]), p) for i in range(n)]
    return all(s >= 0 for s in signs) or all(s <= 0 for s in signs)


def _segment_distance(p1, p2, q1, q2) -> float:
    def orient(a, b, c):
        return _cross(a, b, c)

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return 0.0

    def point_seg(p, a, b):
        au, av = b[0] - a[0], b[1] - a[1]
        denom = au * au + av * av
        if denom == 0:
            return math.hypot(p[0] - a[0], p[1] - a[1])
        t = max(0.0, min(1.0, ((p[0] - a[0]) * au + (p[1] - a[1]) * av) / denom))
        return math.hypot(p[0] - (a[0] + t * au), p[1] - (a[1] + t * av))

    return min(
        point_seg(p1, q1, q2),
        point_seg(p2, q1, q2),
        point_seg(q1, p1, p2),
        point_seg(q2, p1, p2),
    )


def convex_polygon_distance(pa: np.ndarray, pb: np.ndarray) -> float:
    """Euclidean edge-to-edge distance between convex polygons (0 if touching)."""
    pa = np.asarray(pa, dtype=np.float64)
    pb = np.asarray(pb, dtype=np.float64)
    if _point_in_convex(tuple(pa[0]), pb) or _point_in_convex(tuple(pb[0]), pa):
        return 0.0
    best = math.inf
    na, nb = len(pa), len(pb)
    for i in range(na):
        a1, a2 = tuple(pa[i]), tuple(pa[(i + 1) % na])
        for j in range(nb):
            b1, b2 = tuple(pb[j]), tuple(pb[(j + 1) % nb])
            best = min(best, _segment_distance(a1, a2, b1, b2))
            if best == 0.0:
                return 0.0
    return best
