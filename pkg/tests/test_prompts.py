import numpy as np
import pytest

from bevlift.errors import BadArgs
from bevlift.prompts import PromptSet, generate_grid, prune_prompts, round_half_up
from bevlift.raster import BevImage


def blank_image(small_grid, h=None, w=None) -> BevImage:
    h = h or small_grid.height
    w = w or small_grid.width
    return BevImage(np.zeros((h, w, 3), np.uint8), small_grid)


class TestGenerateGrid:
    def test_single_prompt_center(self):
        ps = generate_grid(1, 600, 600)
        assert len(ps) == 1
        assert ps.prompt(0) == (300.0, 300.0)

    def test_default_grid_first_prompt(self):
        ps = generate_grid(32, 600, 600)
        assert len(ps) == 1024
        assert ps.prompt(0) == (9.375, 9.375)
        assert ps.grid_n == 32

    def test_2x2_on_4x4(self):
        ps = generate_grid(2, 4, 4)
        assert [tuple(p) for p in ps.coords] == [(1, 1), (1, 3), (3, 1), (3, 3)]

    def test_row_major_order(self):
        ps = generate_grid(3, 9, 90)
        us = ps.coords[:, 0]
        assert (np.diff(us) >= 0).all()  # row index never decreases in row-major order

    def test_bad_args(self):
        for n, h, w in [(0, 10, 10), (4, 0, 10), (4, 10, 0)]:
            with pytest.raises(BadArgs):
                generate_grid(n, h, w)

    def test_json_round_trip(self):
        ps = generate_grid(4, 40, 40)
        again = PromptSet.from_json(ps.to_json())
        assert again.grid_n == 4
        assert np.array_equal(again.coords, ps.coords)


class TestPrunePrompts:
    def test_all_black_empty_result(self, small_grid):
        ps = generate_grid(8, 40, 40)
        assert len(prune_prompts(ps, blank_image(small_grid), 3)) == 0

    def test_fully_active_unchanged(self, small_grid):
        img = blank_image(small_grid)
        img.pixels[:] = 7
        ps = generate_grid(8, 40, 40)
        out = prune_prompts(ps, img, 3)
        assert np.array_equal(out.coords, ps.coords)

    def test_single_pixel_window_enumeration(self, default_grid):
        # oracle: brute-force enumeration of the Chebyshev-window predicate
        img = BevImage(np.zeros((600, 600, 3), np.uint8), default_grid)
        img.pixels[300, 300] = (255, 0, 0)
        ps = generate_grid(32, 600, 600)
        radius = 3
        expected = [
            i
            for i in range(len(ps))
            if abs(int(round_half_up(ps.coords[i, 0])) - 300) <= radius
            and abs(int(round_half_up(ps.coords[i, 1])) - 300) <= radius
        ]
        out = prune_prompts(ps, img, radius)
        got = [i for i in range(len(ps)) if tuple(ps.coords[i]) in {tuple(c) for c in out.coords}]
        assert got == expected
        # for the 32x32 grid the nearest rounded coordinate is 9 pixels away
        assert expected == []
        assert len(out) == 0

    def test_radius_zero_keeps_exact_hits(self, small_grid):
        img = blank_image(small_grid)
        ps = generate_grid(2, 4, 4)  # prompts at (1,1),(1,3),(3,1),(3,3)
        img.pixels[1, 3] = (1, 1, 1)
        out = prune_prompts(ps, img, 0)
        assert [tuple(p) for p in out.coords] == [(1, 3)]

    def test_subsequence_and_idempotent(self, small_grid):
        rng = np.random.RandomState(2)
        img = blank_image(small_grid)
        img.pixels[rng.rand(40, 40) < 0.05] = (9, 0, 0)
        ps = generate_grid(8, 40, 40)
        once = prune_prompts(ps, img, 2)
        twice = prune_prompts(once, img, 2)
        assert np.array_equal(once.coords, twice.coords)
        # subsequence of the input order
        pool = [tuple(p) for p in ps.coords]
        kept = [tuple(p) for p in once.coords]
        it = iter(pool)
        assert all(any(p == q for q in it) for p in kept)

    def test_never_removes_active_rounded_prompt(self, small_grid):
        img = blank_image(small_grid)
        ps = generate_grid(4, 40, 40)
        for u, v in ps.coords:
            img.pixels[int(round_half_up(u)), int(round_half_up(v))] = (1, 2, 3)
        out = prune_prompts(ps, img, 0)
        assert len(out) == len(ps)

    def test_negative_radius_rejected(self, small_grid):
        with pytest.raises(BadArgs):
            prune_prompts(generate_grid(2, 4, 4), blank_image(small_grid), -1)
