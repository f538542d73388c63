import math

import numpy as np
import pytest

from bevlift.errors import EmptyInput, EmptyMask
from bevlift.geometry import (
    RotatedBox2D,
    box_corners,
    canonical_angle,
    convex_hull,
    convex_polygon_distance,
    min_area_rect,
    point_in_rotated_rect,
    rotated_iou,
)
from bevlift.masks import Mask, rle_encode


def mask_from_bitmap(bitmap: np.ndarray) -> Mask:
    h, w = bitmap.shape
    return Mask(h, w, rle_encode(bitmap), 1.0)


def brute_force_hull_edges(points: np.ndarray) -> set:
    """O(n^2) oracle: (i, j) is a hull edge iff all points lie on its left."""
    n = len(points)
    edges = set()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = points[j] - points[i]
            cross = d[0] * (points[:, 1] - points[i, 1]) - d[1] * (points[:, 0] - points[i, 0])
            others = np.delete(cross, [i, j])
            if (others > 0).all():
                edges.add((i, j))
    return edges


def brute_force_hull_vertices(points: np.ndarray) -> set:
    verts = set()
    for i, j in brute_force_hull_edges(points):
        verts.add(tuple(points[i]))
        verts.add(tuple(points[j]))
    return verts


def sweep_min_rect_area(hull_pts: np.ndarray, step_deg: float = 0.25) -> float:
    """Angle-sweep oracle: axis-aligned extent after rotating by each angle."""
    best = math.inf
    for deg in np.arange(0.0, 90.0, step_deg):
        t = math.radians(deg)
        c, s = math.cos(t), math.sin(t)
        xs = hull_pts[:, 0] * c + hull_pts[:, 1] * s
        ys = -hull_pts[:, 0] * s + hull_pts[:, 1] * c
        area = (xs.max() - xs.min()) * (ys.max() - ys.min())
        best = min(best, area)
    return best


class TestConvexHull:
    def test_unit_square(self):
        hull = convex_hull([(0, 0), (0, 1), (1, 1), (1, 0)])
        assert not hull.degenerate
        assert set(hull.vertices) == {(0, 0), (0, 1), (1, 1), (1, 0)}
        # CCW orientation: positive shoelace
        v = np.asarray(hull.vertices)
        area = 0.5 * (np.dot(v[:, 0], np.roll(v[:, 1], -1)) - np.dot(v[:, 1], np.roll(v[:, 0], -1)))
        assert area > 0

    def test_interior_point_excluded(self):
        hull = convex_hull([(0, 0), (0, 2), (2, 2), (2, 0), (1, 1)])
        assert (1, 1) not in hull.vertices

    def test_collinear_degenerate(self):
        hull = convex_hull([(0, 0), (1, 1), (2, 2)])
        assert hull.degenerate
        assert set(hull.vertices) == {(0, 0), (2, 2)}

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            convex_hull([])

    def test_matches_brute_force_oracle(self):
        rng = np.random.RandomState(21)
        for _ in range(60):
            n = rng.randint(4, 40)
            angles = rng.uniform(0, 2 * math.pi, n)
            radii = np.sqrt(rng.uniform(0, 1, n))
            pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
            hull = convex_hull(pts)
            assert set(hull.vertices) == brute_force_hull_vertices(pts)


class TestMinAreaRect:
    def test_axis_aligned_block(self):
        bitmap = np.zeros((60, 60), dtype=bool)
        bitmap[10:20, 30:50] = True
        rect = min_area_rect(mask_from_bitmap(bitmap))
        # canonical representation: longer side first, theta = its direction
        assert rect.cx2d == pytest.approx(14.5)
        assert rect.cy2d == pytest.approx(39.5)
        assert (rect.dx2d, rect.dy2d) == pytest.approx((20.0, 10.0))
        assert rect.theta2d == pytest.approx(math.pi / 2)

    def test_single_pixel(self):
        bitmap = np.zeros((20, 20), dtype=bool)
        bitmap[7, 9] = True
        rect = min_area_rect(mask_from_bitmap(bitmap))
        assert (rect.cx2d, rect.cy2d) == pytest.approx((7.0, 9.0))
        assert (rect.dx2d, rect.dy2d) == pytest.approx((1.0, 1.0))
        assert rect.theta2d == pytest.approx(0.0)

    def test_one_pixel_line_no_zero_thickness(self):
        bitmap = np.zeros((20, 20), dtype=bool)
        bitmap[5, 2:16] = True
        rect = min_area_rect(mask_from_bitmap(bitmap))
        assert (rect.dx2d, rect.dy2d) == pytest.approx((14.0, 1.0))
        assert rect.theta2d == pytest.approx(math.pi / 2)

    def test_empty_mask(self):
        m = Mask(4, 4, np.array([16]), 1.0)
        with pytest.raises(EmptyMask):
            min_area_rect(m)

    def test_45_degree_rect_vs_sweep_oracle(self):
        # digitized rotated rectangle: pixels whose center lies inside
        from bevlift.geometry import mask_corner_points, points_in_rotated_rect

        true_rect = RotatedBox2D(30.0, 30.0, 30.0, 10.0, math.pi / 4)
        rr, cc = np.meshgrid(np.arange(60), np.arange(60), indexing="ij")
        inside = points_in_rotated_rect(rr.ravel().astype(float), cc.ravel().astype(float), true_rect)
        bitmap = inside.reshape(60, 60)
        m = mask_from_bitmap(bitmap)
        rect = min_area_rect(m)
        corners = mask_corner_points(m)
        hull = np.asarray(convex_hull(corners).vertices)
        oracle_area = sweep_min_rect_area(hull)
        assert rect.area <= oracle_area * (1 + 1e-9)
        assert abs(rect.area - oracle_area) <= 0.01 * oracle_area
        assert abs(canonical_angle(rect.theta2d - math.pi / 4)) < math.radians(3)

    def test_containment_and_aabb_bound(self):
        rng = np.random.RandomState(17)
        from bevlift.geometry import mask_corner_points

        for _ in range(40):
            bitmap = rng.rand(24, 24) < 0.2
            if not bitmap.any():
                continue
            m = mask_from_bitmap(bitmap)
            rect = min_area_rect(m)
            corners = mask_corner_points(m)
            for p in corners:
                assert point_in_rotated_rect(p - 0.5, rect, eps=1e-7)
            aabb_area = np.ptp(corners[:, 0]) * np.ptp(corners[:, 1])
            assert rect.area <= aabb_area + 1e-9


class TestRotatedIou:
    def test_identical(self):
        a = RotatedBox2D(3, 4, 2, 1, 0.3)
        assert rotated_iou(a, a) == pytest.approx(1.0)

    def test_disjoint(self):
        a = RotatedBox2D(0, 0, 1, 1, 0.0)
        b = RotatedBox2D(10, 10, 1, 1, 0.0)
        assert rotated_iou(a, b) == 0.0

    def test_offset_unit_squares(self):
        a = RotatedBox2D(0, 0, 1, 1, 0.0)
        b = RotatedBox2D(0.5, 0, 1, 1, 0.0)
        assert rotated_iou(a, b) == pytest.approx(1 / 3)

    def test_symmetry_and_bounds(self):
        rng = np.random.RandomState(3)
        for _ in range(50):
            a = RotatedBox2D(*rng.uniform(-2, 2, 2), *rng.uniform(0.5, 3, 2), rng.uniform(-1.5, 1.5))
            b = RotatedBox2D(*rng.uniform(-2, 2, 2), *rng.uniform(0.5, 3, 2), rng.uniform(-1.5, 1.5))
            ab, ba = rotated_iou(a, b), rotated_iou(b, a)
            assert ab == pytest.approx(ba, abs=1e-12)
            assert 0.0 <= ab <= 1.0

    def test_rigid_motion_invariance(self):
        rng = np.random.RandomState(4)
        for _ in range(25):
            a = RotatedBox2D(*rng.uniform(-2, 2, 2), *rng.uniform(0.5, 3, 2), rng.uniform(-1.5, 1.5))
            b = RotatedBox2D(*rng.uniform(-2, 2, 2), *rng.uniform(0.5, 3, 2), rng.uniform(-1.5, 1.5))
            base = rotated_iou(a, b)
            # common rigid motion: rotate both about the origin, then translate
            phi = rng.uniform(-math.pi, math.pi)
            tx, ty = rng.uniform(-5, 5, 2)

            def moved(box):
                c, s = math.cos(phi), math.sin(phi)
                cx = box.cx2d * c - box.cy2d * s + tx
                cy = box.cx2d * s + box.cy2d * c + ty
                return RotatedBox2D(cx, cy, box.dx2d, box.dy2d, canonical_angle(box.theta2d + phi))

            assert rotated_iou(moved(a), moved(b)) == pytest.approx(base, abs=1e-9)


class TestPointInRect:
    def test_center_and_corners_inclusive(self):
        box = RotatedBox2D(1.0, 2.0, 3.0, 1.5, 0.7)
        assert point_in_rotated_rect((1.0, 2.0), box)
        for corner in box_corners(box):
            assert point_in_rotated_rect(tuple(corner), box)

    def test_beyond_half_diagonal(self):
        box = RotatedBox2D(0.0, 0.0, 2.0, 1.0, 0.0)
        corner = np.array([1.0, 0.5])
        assert not point_in_rotated_rect(tuple(corner * 1.01), box)


class TestPolygonDistance:
    def test_touching_is_zero(self):
        a = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=float)
        b = a + [1.0, 0.0]
        assert convex_polygon_distance(a, b) == 0.0

    def test_separated_squares(self):
        a = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=float)
        b = a + [3.0, 0.0]
        assert convex_polygon_distance(a, b) == pytest.approx(2.0)

    def test_contained(self):
        a = np.array([[0, 0], [0, 4], [4, 4], [4, 0]], dtype=float)
        b = np.array([[1, 1], [1, 2], [2, 2], [2, 1]], dtype=float)
        assert convex_polygon_distance(a, b) == 0.0


class TestCanonicalAngle:
    @pytest.mark.parametrize(
        "raw,expected",
        [(0.0, 0.0), (math.pi, 0.0), (-math.pi / 2, math.pi / 2), (math.pi / 2, math.pi / 2),
         (2.0, 2.0 - math.pi), (-2.0, math.pi - 2.0)],
    )
    def test_wrap(self, raw, expected):
        assert canonical_angle(raw) == pytest.approx(expected)
