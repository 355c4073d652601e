import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from motion_vos.masks import (
    Box,
    EmptyMaskError,
    Mask,
    Point,
    ProbMap,
    bounding_box,
    boundary_pixels,
    centroid,
    dilate,
    frame_filename,
    iou,
    load_mask,
    load_prob,
    save_mask,
    save_prob,
)

from conftest import mask_pairs, masks, square


def brute_iou(a, b):
    inter = union = 0
    for y in range(a.height):
        for x in range(a.width):
            p, q = a.cells[y, x], b.cells[y, x]
            inter += p and q
            union += p or q
    return 1.0 if union == 0 else inter / union


def brute_boundary(m):
    out = set()
    for y in range(m.height):
        for x in range(m.width):
            if not m.cells[y, x]:
                continue
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nx, ny = x + dx, y + dy
                if not (0 <= nx < m.width and 0 <= ny < m.height) or not m.cells[ny, nx]:
                    out.add((x, y))
                    break
    return out


class TestIou:
    def test_identical(self):
        m = square(1, 1, 3, 3, 6, 6)
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        assert iou(square(0, 0, 1, 1, 6, 6), square(3, 3, 4, 4, 6, 6)) == 0.0

    def test_rows_overlap_4x4(self):
        a = square(0, 0, 3, 1, 4, 4)
        b = square(0, 1, 3, 2, 4, 4)
        assert iou(a, b) == pytest.approx(4 / 12)
        assert iou(a, b) == brute_iou(a, b)

    def test_empty_conventions(self):
        e = Mask.empty(5, 5)
        assert iou(e, e) == 1.0
        assert iou(e, square(1, 1, 2, 2, 5, 5)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            iou(Mask.empty(4, 4), Mask.empty(5, 4))

    @given(mask_pairs())
    def test_matches_brute_force_and_symmetric(self, pair):
        a, b = pair
        assert iou(a, b) == brute_iou(a, b)
        assert iou(a, b) == iou(b, a)

    @given(mask_pairs())
    def test_one_iff_identical(self, pair):
        a, b = pair
        assert (iou(a, b) == 1.0) == (a == b)

    @given(mask_pairs())
    def test_zero_iff_no_overlap(self, pair):
        a, b = pair
        nonempty_union = (a.cells | b.cells).any()
        assert (iou(a, b) == 0.0) == (nonempty_union and not (a.cells & b.cells).any())


class TestCentroidAndBox:
    def test_single_pixel(self):
        m = Mask.from_pixels([(3, 5)], 8, 8)
        assert centroid(m) == Point(3.0, 5.0)
        assert bounding_box(m) == Box(3, 5, 3, 5)

    def test_square(self):
        assert centroid(square(5, 5, 15, 15, 21, 21)) == Point(10.0, 10.0)

    def test_two_pixels(self):
        m = Mask.from_pixels([(0, 0), (4, 0)], 5, 1)
        assert centroid(m) == Point(2.0, 0.0)
        assert bounding_box(Mask.from_pixels([(1, 2), (7, 4)], 8, 5)) == Box(1, 2, 7, 4)

    def test_disc_radius_3(self):
        pix = [(x, y) for y in range(21) for x in range(21) if (x - 10) ** 2 + (y - 10) ** 2 <= 9]
        xs, ys = [p[0] for p in pix], [p[1] for p in pix]
        expected = Box(min(xs), min(ys), max(xs), max(ys))
        assert expected == Box(7, 7, 13, 13)
        assert bounding_box(Mask.from_pixels(pix, 21, 21)) == expected

    def test_empty_raises(self):
        with pytest.raises(EmptyMaskError):
            centroid(Mask.empty(3, 3))
        with pytest.raises(EmptyMaskError):
            bounding_box(Mask.empty(3, 3))

    @given(masks())
    def test_centroid_inside_box(self, m):
        if m.is_empty():
            return
        c, b = centroid(m), bounding_box(m)
        assert b.x_min <= c.x <= b.x_max and b.y_min <= c.y <= b.y_max


class TestBoundary:
    def test_single_pixel(self):
        assert boundary_pixels(Mask.from_pixels([(2, 2)], 5, 5)) == {(2, 2)}

    def test_full_3x3(self):
        m = Mask(np.ones((3, 3), bool))
        assert boundary_pixels(m) == {(x, y) for x in range(3) for y in range(3)} - {(1, 1)}

    def test_square_in_9x9(self):
        m = square(2, 2, 6, 6, 9, 9)
        b = boundary_pixels(m)
        assert len(b) == 16
        assert b == brute_boundary(m)

    @given(masks())
    def test_matches_brute_force_and_subset(self, m):
        b = boundary_pixels(m)
        assert b == brute_boundary(m)
        assert b <= m.pixels()

    @given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 4), st.integers(0, 4))
    def test_removing_boundary_shrinks_solid_rect(self, w, h, x0, y0):
        m = square(x0, y0, x0 + w - 1, y0 + h - 1, x0 + w + 2, y0 + h + 2)
        rest = m.pixels() - boundary_pixels(m)
        assert len(rest) < m.area


class TestDilate:
    def test_radius_zero(self):
        s = {(1, 1), (3, 2)}
        assert dilate(s, 0, (5, 5)) == s

    def test_unit_disc(self):
        assert dilate({(5, 5)}, 1, (10, 10)) == {(5, 5), (4, 5), (6, 5), (5, 4), (5, 6)}

    def test_clipped(self):
        assert dilate({(0, 0)}, 1, (4, 4)) == {(0, 0), (1, 0), (0, 1)}

    @given(masks(8), st.floats(0, 3), st.floats(0, 3))
    def test_monotone(self, m, r1, r2):
        r1, r2 = sorted((r1, r2))
        s = m.pixels()
        bounds = (m.width, m.height)
        small = dilate(s, r1, bounds)
        assert s <= small <= dilate(s, r2, bounds)


class TestTypes:
    def test_prob_range_checked(self):
        with pytest.raises(ValueError):
            ProbMap(np.full((2, 2), 1.5))
        with pytest.raises(ValueError):
            ProbMap(np.array([[np.nan]]))

    def test_mask_is_read_only(self):
        m = square(0, 0, 1, 1, 3, 3)
        with pytest.raises(ValueError):
            m.cells[0, 0] = False

    @given(masks(8), st.integers(-4, 4), st.integers(-4, 4))
    def test_translate_matches_pixel_shift(self, m, dx, dy):
        moved = m.translate(dx, dy).pixels()
        expected = {(x + dx, y + dy) for x, y in m.pixels() if 0 <= x + dx < m.width and 0 <= y + dy < m.height}
        assert moved == expected


class TestIO:
    def test_filename(self):
        assert frame_filename(7) == "00007.pgm"

    def test_mask_roundtrip_is_binary_p5(self, tmp_path):
        m = square(1, 2, 4, 5, 9, 7)
        path = tmp_path / frame_filename(0)
        save_mask(m, path)
        raw = path.read_bytes()
        assert raw.startswith(b"P5")
        assert set(raw[-63:]) <= {0, 255}
        assert load_mask(path) == m

    def test_prob_roundtrip(self, tmp_path):
        p = ProbMap(np.array([[0.0, 0.25], [0.5, 1.0]]))
        save_prob(p, tmp_path / "p.pgm")
        back = load_prob(tmp_path / "p.pgm")
        assert np.allclose(back.values, np.rint(p.values * 255) / 255)
