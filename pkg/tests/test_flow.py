import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from motion_vos.flow import (
    FlowField,
    Frame,
    estimate_flow,
    flow_box_prompt,
    masked_flow,
    motion_flow,
    save_flow,
    warp_mask_forward,
)
from motion_vos.masks import Box, EmptyMaskError, Mask, iou, load_gray

from conftest import square, textured


def shifted_pair(seed, dx, dy, size=64):
    img = textured(seed, size, size)
    return Frame(img), Frame(np.roll(img, (dy, dx), axis=(0, 1)))


class TestEstimate:
    def test_identical_frames_give_zero(self):
        f = Frame(textured(0))
        fl = estimate_flow(f, f)
        assert not fl.u.any() and not fl.v.any()

    def test_flat_frames_give_zero(self):
        f = Frame(np.full((32, 32), 0.4))
        fl = estimate_flow(f, f)
        assert not fl.u.any() and not fl.v.any()

    def test_shift_3_0(self):
        a, b = shifted_pair(7, 3, 0)
        fl = estimate_flow(a, b)
        c = (slice(16, 48), slice(16, 48))
        assert abs(fl.u[c].mean() - 3) < 0.5 and abs(fl.v[c].mean()) < 0.5

    @pytest.mark.parametrize("dx,dy", [(-4, 3), (2, -2), (0, 4), (-1, -4)])
    def test_integer_shifts(self, dx, dy):
        a, b = shifted_pair(3, dx, dy)
        fl = estimate_flow(a, b)
        c = (slice(16, 48), slice(16, 48))
        assert abs(fl.u[c].mean() - dx) < 0.5 and abs(fl.v[c].mean() - dy) < 0.5

    @given(st.integers(0, 1000), st.integers(0, 3))
    def test_finite_and_bounded_on_noise(self, seed, levels):
        rng = np.random.default_rng(seed)
        fl = estimate_flow(Frame(rng.random((24, 24))), Frame(rng.random((24, 24))), levels=max(levels, 1))
        bound = 2 * 3 * (2 ** 3 - 1)
        assert np.all(np.isfinite(fl.u)) and np.all(np.abs(fl.u) <= bound) and np.all(np.abs(fl.v) <= bound)

    def test_motion_flow_lives_on_recent_grid(self):
        a, b = shifted_pair(5, 2, 1)
        fl = motion_flow(a, b, 1)
        c = (slice(16, 48), slice(16, 48))
        assert abs(fl.u[c].mean() - 2) < 0.5 and abs(fl.v[c].mean() - 1) < 0.5

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            estimate_flow(Frame(np.zeros((8, 8))), Frame(np.zeros((8, 9))))


class TestMaskedFlow:
    def test_uniform_full_mask(self):
        m = Mask(np.ones((6, 6), bool))
        _, mean = masked_flow(FlowField.uniform(6, 6, 2, 1), m)
        assert mean == (2.0, 1.0)

    def test_half_mask_zeroes_outside(self):
        m = square(0, 0, 2, 5, 6, 6)
        g, mean = masked_flow(FlowField.uniform(6, 6, 2, 1), m)
        assert mean == (2.0, 1.0)
        assert not g.u[:, 3:].any() and (g.u[:, :3] == 2).all()

    def test_outside_values_ignored(self):
        u = np.full((6, 6), -4.0)
        u[:, :3] = 4.0
        _, mean = masked_flow(FlowField(u, np.zeros((6, 6))), square(0, 0, 2, 5, 6, 6))
        assert mean == (4.0, 0.0)

    def test_empty_raises(self):
        with pytest.raises(EmptyMaskError):
            masked_flow(FlowField.zeros(4, 4), Mask.empty(4, 4))


class TestWarp:
    def test_zero_flow_identity(self):
        m = square(4, 4, 10, 12, 20, 20)
        assert warp_mask_forward(m, FlowField.zeros(20, 20)) == m

    def test_translation(self):
        m = square(4, 4, 10, 10, 20, 20)
        assert warp_mask_forward(m, FlowField.uniform(20, 20, 3, 0)) == m.translate(3, 0)

    def test_per_step_scaling(self):
        m = square(4, 4, 10, 10, 20, 20)
        assert warp_mask_forward(m, FlowField.uniform(20, 20, 2, 0, dt=2), 1) == m.translate(1, 0)

    def test_leaving_frame_raises(self):
        with pytest.raises(EmptyMaskError):
            warp_mask_forward(square(0, 0, 2, 2, 8, 8), FlowField.uniform(8, 8, 20, 0))

    @given(st.integers(2, 10), st.integers(2, 10), st.integers(-3, 3), st.integers(-3, 3))
    def test_rigid_rect_translation(self, w, h, dx, dy):
        m = square(8, 8, 7 + w, 7 + h, 28, 28)
        assert warp_mask_forward(m, FlowField.uniform(28, 28, dx, dy)) == m.translate(dx, dy)

    @pytest.mark.parametrize("dx,dy", [(3, 0), (-2, 4), (4, -4)])
    def test_estimated_flow_warp(self, dx, dy):
        size = 64
        img = textured(9, size, size)
        m = square(20, 20, 39, 39, size, size)
        nxt = m.translate(dx, dy)
        fl = motion_flow(Frame(img), Frame(np.roll(img, (dy, dx), axis=(0, 1))), 1)
        g, _ = masked_flow(fl, nxt)
        assert iou(warp_mask_forward(nxt, g, 1), nxt.translate(dx, dy)) >= 0.95


class TestBox:
    def test_square(self):
        assert flow_box_prompt(square(8, 5, 18, 15, 30, 30), (30, 30)) == Box(8, 5, 18, 15)

    def test_single_pixel(self):
        assert flow_box_prompt(Mask.from_pixels([(2, 2)], 5, 5), (5, 5)) == Box(2, 2, 2, 2)

    def test_clamped(self):
        m = square(15, 3, 19, 6, 20, 10)
        assert flow_box_prompt(m, (18, 10)).x_max == 17


def test_save_flow_sidecar_roundtrip(tmp_path):
    u = np.linspace(-3, 5, 64).reshape(8, 8)
    fl = FlowField(u, -u, dt=2)
    save_flow(fl, tmp_path, "f")
    meta = json.loads((tmp_path / "f.json").read_text())
    assert meta["dt"] == 2
    back = meta["u"]["offset"] + load_gray(tmp_path / "f_u.pgm") * 255 * meta["u"]["scale"]
    assert np.allclose(back, u, atol=meta["u"]["scale"])
