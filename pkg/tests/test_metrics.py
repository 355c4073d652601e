import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from motion_vos.masks import Mask
from motion_vos.metrics import (
    FrameResult,
    aggregate,
    default_tolerance,
    evaluate_sequence,
    f_score,
    j_score,
)

from conftest import mask_pairs, square


def brute_boundary(cells):
    h, w = cells.shape
    out = []
    for y in range(h):
        for x in range(w):
            if cells[y, x] and any(
                not (0 <= x + dx < w and 0 <= y + dy < h) or not cells[y + dy, x + dx]
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
            ):
                out.append((x, y))
    return out


def brute_f(pred, gt, tol):
    bp, bg = brute_boundary(pred.cells), brute_boundary(gt.cells)
    if not bp and not bg:
        return 1.0
    if not bp or not bg:
        return 0.0

    def near(p, pts):
        return any((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 <= tol * tol for q in pts)

    prec = sum(near(p, bg) for p in bp) / len(bp)
    rec = sum(near(g, bp) for g in bg) / len(bg)
    return 0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec)


def brute_j(pred, gt):
    inter = int(np.sum(pred.cells & gt.cells))
    union = int(np.sum(pred.cells | gt.cells))
    return 1.0 if union == 0 else inter / union


class TestJ:
    def test_cases(self):
        g = square(2, 2, 5, 5, 10, 10)
        assert j_score(g, g) == 1.0
        assert j_score(Mask.empty(10, 10), g) == 0.0
        assert j_score(square(2, 2, 5, 5, 12, 12), square(4, 2, 7, 5, 12, 12)) == pytest.approx(1 / 3)


class TestF:
    def test_identity(self):
        g = square(2, 2, 5, 5, 10, 10)
        assert f_score(g, g, 1) == 1.0

    def test_far_apart(self):
        assert f_score(square(0, 0, 2, 2, 20, 20), square(12, 12, 15, 15, 20, 20), 1) == 0.0

    def test_shift_by_one_matches_brute(self):
        g = square(3, 3, 9, 9, 16, 16)
        p = g.translate(1, 0)
        assert f_score(p, g, 1) == brute_f(p, g, 1)

    def test_empty_conventions(self):
        e = Mask.empty(6, 6)
        assert f_score(e, e) == 1.0
        assert f_score(e, square(1, 1, 2, 2, 6, 6)) == 0.0

    def test_default_tolerance(self):
        assert default_tolerance(96, 96) == math.ceil(0.008 * math.hypot(96, 96)) == 2

    @given(mask_pairs(10), st.integers(0, 3))
    def test_brute_force_and_symmetry(self, pair, tol):
        p, g = pair
        assert f_score(p, g, tol) == pytest.approx(brute_f(p, g, tol), abs=1e-12)
        assert f_score(p, g, tol) == pytest.approx(f_score(g, p, tol), abs=1e-12)

    @given(mask_pairs(10), st.integers(0, 3), st.integers(0, 3))
    def test_monotone_in_tolerance(self, pair, t1, t2):
        t1, t2 = sorted((t1, t2))
        p, g = pair
        assert f_score(p, g, t1) <= f_score(p, g, t2) + 1e-12


class TestAggregate:
    def test_perfect(self):
        r = aggregate([FrameResult(i, 1.0, 1.0) for i in range(3)])
        assert (r.mean_j, r.mean_f, r.j_and_f) == (1.0, 1.0, 1.0)

    def test_mean(self):
        r = aggregate([FrameResult(0, 1.0, 0.5), FrameResult(1, 0.0, 0.5)])
        assert r.mean_j == 0.5 and r.j_and_f == (r.mean_j + r.mean_f) / 2

    def test_exclude_occluded(self):
        rs = [FrameResult(0, 0.0, 0.0), FrameResult(1, 1.0, 1.0, occluded=True)]
        assert aggregate(rs).mean_j == 0.5
        assert aggregate(rs, exclude_occluded=True).mean_j == 0.0
        with pytest.raises(ValueError):
            aggregate([])

    def test_sequence_and_files(self, tmp_path):
        g = [square(1, 1, 4, 4, 8, 8), Mask.empty(8, 8)]
        p = [square(1, 1, 4, 4, 8, 8), Mask.empty(8, 8)]
        rep = evaluate_sequence(p, g)
        assert rep.frames_evaluated == 2 and rep.j_and_f == 1.0
        assert rep.per_frame[1].occluded
        rep.write_csv(tmp_path / "m.csv")
        rep.write_json(tmp_path / "m.json")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "frame_index,j,f" and lines[-1].startswith("mean,")
        assert set(json.loads((tmp_path / "m.json").read_text())) == {"mean_j", "mean_f", "j_and_f", "frames"}
        with pytest.raises(ValueError):
            evaluate_sequence(p, g[:1])
