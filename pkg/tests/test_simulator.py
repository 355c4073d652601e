import json

import numpy as np
import pytest

from motion_vos.masks import centroid, load_mask
from motion_vos.simulator import (
    Scenario,
    ScenarioError,
    ShapeSpec,
    TrajectorySpec,
    generate_scenario,
    load_manifest,
    scenario_suite,
    write_scenario,
)


def test_constant_velocity_kinematics():
    s = Scenario(num_frames=8, object=ShapeSpec(width=6, height=6), trajectory=TrajectorySpec(start=(10, 10), velocity=(2, 0)))
    c = centroid(generate_scenario(s)[5][1].mask)
    assert abs(c.x - 20) <= 0.5 and abs(c.y - 10) <= 0.5


def test_occlusion_schedule():
    s = Scenario(num_frames=15, occlusions=((8, 12),))
    seq = generate_scenario(s)
    assert seq[10][1].occluded and seq[10][1].mask.is_empty()
    assert not seq[7][1].occluded and not seq[13][1].occluded


def test_bit_identical():
    s = scenario_suite()["distractor"]
    a, b = generate_scenario(s), generate_scenario(s)
    for (fa, ga), (fb, gb) in zip(a, b):
        assert np.array_equal(fa.intensity, fb.intensity) and ga.mask == gb.mask


@pytest.mark.parametrize("name", list(scenario_suite()))
def test_suite_shapes(name):
    s = scenario_suite()[name]
    seq = generate_scenario(s)
    assert len(seq) == s.num_frames
    first = seq[0][1]
    assert not first.occluded and not first.mask.is_empty()
    areas = {g.mask.area for _, g in seq if not g.occluded}
    assert len(areas) == 1  # rigid and never clipped
    for f, g in seq:
        assert f.index == g.frame_index and (g.occluded == g.mask.is_empty())


def test_suite_contents():
    suite = scenario_suite()
    assert {"linear", "occlusion", "reappear-far", "sinusoidal", "distractor"} <= set(suite)
    assert [e - s + 1 for s, e in suite["occlusion"].occlusions] == [5]
    far = suite["reappear-far"]
    (s, e), = far.occlusions
    x0, _ = far.trajectory.position(s - 1)
    x1, _ = far.trajectory.position(e + 1)
    assert x1 - x0 >= 2 * far.object.radius


def test_moving_texture_is_rigid():
    s = scenario_suite()["linear"]
    seq = generate_scenario(s)
    a, b = seq[0], seq[1]
    ys, xs = np.nonzero(a[1].mask.cells)
    assert np.array_equal(a[0].intensity[ys, xs], b[0].intensity[ys + 1, xs + 2])


@pytest.mark.parametrize(
    "kwargs,field",
    [
        (dict(num_frames=0), "num_frames"),
        (dict(occlusions=((0, 2),)), "occlusions"),
        (dict(occlusions=((5, 40),)), "occlusions"),
        (dict(trajectory=TrajectorySpec(start=(2, 2))), "trajectory.start"),
        (dict(object=ShapeSpec(kind="star")), "object.kind"),
        (dict(trajectory=TrajectorySpec(kind="spiral")), "trajectory.kind"),
    ],
)
def test_validation(kwargs, field):
    with pytest.raises(ScenarioError) as exc:
        generate_scenario(Scenario(**kwargs))
    assert exc.value.field == field


def test_write_and_reload(tmp_path):
    s = scenario_suite()["occlusion"]
    path = write_scenario(s, tmp_path)
    manifest = json.loads(path.read_text())
    for key in ("width", "height", "num_frames", "occlusions", "trajectory", "seed"):
        assert key in manifest
    assert manifest["occlusions"] == [[14, 18]]
    assert load_manifest(path) == s
    assert len(list((tmp_path / "frames").glob("*.pgm"))) == s.num_frames
    assert load_mask(tmp_path / "gt_masks" / "00003.pgm") == generate_scenario(s)[3][1].mask


def test_unknown_manifest_field():
    d = scenario_suite()["linear"].to_dict()
    d["colour"] = "red"
    with pytest.raises(ScenarioError):
        Scenario.from_dict(d)
