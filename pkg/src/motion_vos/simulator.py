"""Deterministic synthetic video scenes with ground-truth masks and scripted occlusions."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .flow import Frame
from .masks import Mask, frame_filename, save_gray, save_mask


class ScenarioError(ValueError):
    """Invalid scenario description; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ShapeSpec:
    kind: str = "rect"  # "rect" or "disc"
    width: float = 16.0
    height: float = 16.0
    radius: float = 8.0
    texture_seed: int = 1
    contrast: float = 0.8

    def half_extent(self) -> tuple[float, float]:
        if self.kind == "disc":
            return self.radius, self.radius
        return self.width / 2.0, self.height / 2.0


@dataclass(frozen=True)
class TrajectorySpec:
    """``constant``: start + velocity * t.  ``sinusoidal`` adds amplitude * sin(2 pi t / period)."""

    kind: str = "constant"
    start: tuple[float, float] = (20.0, 20.0)
    velocity: tuple[float, float] = (2.0, 0.0)
    amplitude: tuple[float, float] = (0.0, 0.0)
    period: float = 20.0

    def position(self, t: int) -> tuple[float, float]:
        x = self.start[0] + self.velocity[0] * t
        y = self.start[1] + self.velocity[1] * t
        if self.kind == "sinusoidal":
            s = math.sin(2.0 * math.pi * t / self.period)
            x += self.amplitude[0] * s
            y += self.amplitude[1] * s
        return x, y


@dataclass(frozen=True)
class BackgroundSpec:
    seed: int = 0
    contrast: float = 0.6


@dataclass(frozen=True)
class Distractor:
    shape: ShapeSpec
    position: tuple[float, float]


@dataclass(frozen=True)
class Scenario:
    width: int = 96
    height: int = 96
    num_frames: int = 30
    object: ShapeSpec = field(default_factory=ShapeSpec)
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    occlusions: tuple[tuple[int, int], ...] = ()
    background: BackgroundSpec = field(default_factory=BackgroundSpec)
    distractors: tuple[Distractor, ...] = ()
    seed: int = 0
    name: str = ""

    def occluded(self, t: int) -> bool:
        return any(s <= t <= e for s, e in self.occlusions)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["occlusions"] = [list(o) for o in self.occlusions]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        obj = ShapeSpec(**d.pop("object", {}))
        traj = d.pop("trajectory", {})
        traj = TrajectorySpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in traj.items()})
        bg = BackgroundSpec(**d.pop("background", {}))
        dis = tuple(
            Distractor(ShapeSpec(**x["shape"]), tuple(x["position"])) for x in d.pop("distractors", [])
        )
        occ = tuple(tuple(o) for o in d.pop("occlusions", []))
        known = {"width", "height", "num_frames", "seed", "name"}
        extra = set(d) - known
        if extra:
            raise ScenarioError(sorted(extra)[0], "unknown scenario field")
        return cls(object=obj, trajectory=traj, background=bg, distractors=dis, occlusions=occ, **d)


@dataclass(frozen=True, eq=False)
class GroundTruthRecord:
    frame_index: int
    mask: Mask
    occluded: bool


def validate(s: Scenario) -> None:
    if s.width < 1:
        raise ScenarioError("width", "must be positive")
    if s.height < 1:
        raise ScenarioError("height", "must be positive")
    if s.num_frames < 1:
        raise ScenarioError("num_frames", "must be positive")
    if s.object.kind not in ("rect", "disc"):
        raise ScenarioError("object.kind", f"unknown shape {s.object.kind!r}")
    if s.object.kind == "rect" and (s.object.width <= 0 or s.object.height <= 0):
        raise ScenarioError("object.width", "rect size must be positive")
    if s.object.kind == "disc" and s.object.radius <= 0:
        raise ScenarioError("object.radius", "must be positive")
    if s.trajectory.kind not in ("constant", "sinusoidal"):
        raise ScenarioError("trajectory.kind", f"unknown trajectory {s.trajectory.kind!r}")
    if s.trajectory.kind == "sinusoidal" and s.trajectory.period <= 0:
        raise ScenarioError("trajectory.period", "must be positive")
    for start, end in s.occlusions:
        if not (0 <= start <= end < s.num_frames):
            raise ScenarioError("occlusions", f"interval [{start}, {end}] outside [0, {s.num_frames})")
    if s.occluded(0):
        raise ScenarioError("occlusions", "first frame must be visible")
    hx, hy = s.object.half_extent()
    x, y = s.trajectory.position(0)
    if x - hx < 0 or y - hy < 0 or x + hx > s.width or y + hy > s.height:
        raise ScenarioError("trajectory.start", "object must start fully inside the frame")


def _texture(seed: int, height: int, width: int) -> np.ndarray:
    """Uniform noise smoothed by a 3x3 box filter (periodic edges), in ``[0, 1]``."""
    noise = np.random.default_rng(seed).random((height, width))
    p = np.pad(noise, 1, mode="wrap")
    out = np.zeros((height, width))
    for dy in range(3):
        for dx in range(3):
            out += p[dy:dy + height, dx:dx + width]
    out /= 9.0
    lo, hi = out.min(), out.max()
    return (out - lo) / (hi - lo) if hi > lo else np.full_like(out, 0.5)


def _shape_cells(shape: ShapeSpec, cx: float, cy: float, width: int, height: int) -> np.ndarray:
    # pixel (x, y) belongs to the shape when its centre is inside
    ys, xs = np.mgrid[0:height, 0:width]
    if shape.kind == "disc":
        return (xs - cx) ** 2 + (ys - cy) ** 2 <= shape.radius ** 2
    hx, hy = shape.width / 2.0, shape.height / 2.0
    return (xs >= cx - hx) & (xs < cx + hx) & (ys >= cy - hy) & (ys < cy + hy)


def _paint(canvas: np.ndarray, cells: np.ndarray, shape: ShapeSpec, cx: float, cy: float) -> None:
    hx, hy = shape.half_extent()
    ox, oy = math.floor(cx - hx), math.floor(cy - hy)
    tw, th = int(math.ceil(2 * hx)) + 2, int(math.ceil(2 * hy)) + 2
    tex = _texture(shape.texture_seed, th, tw)
    tex = 0.5 + (tex - 0.5) * shape.contrast
    ys, xs = np.nonzero(cells)
    canvas[ys, xs] = tex[np.clip(ys - oy, 0, th - 1), np.clip(xs - ox, 0, tw - 1)]


def generate_scenario(s: Scenario) -> list[tuple[Frame, GroundTruthRecord]]:
    """Render every frame of ``s`` with its ground truth. Bit-identical for identical scenarios."""
    validate(s)
    bg = _texture(s.background.seed * 7919 + s.seed, s.height, s.width)
    bg = 0.5 + (bg - 0.5) * s.background.contrast
    static = bg.copy()
    for d in s.distractors:
        cells = _shape_cells(d.shape, d.position[0], d.position[1], s.width, s.height)
        _paint(static, cells, d.shape, d.position[0], d.position[1])

    out = []
    for t in range(s.num_frames):
        img = static.copy()
        if s.occluded(t):
            gt = Mask.empty(s.width, s.height)
            occluded = True
        else:
            cx, cy = s.trajectory.position(t)
            cells = _shape_cells(s.object, cx, cy, s.width, s.height)
            _paint(img, cells, s.object, cx, cy)
            gt = Mask(cells)
            occluded = False
        out.append((Frame(np.clip(img, 0.0, 1.0), index=t), GroundTruthRecord(t, gt, occluded)))
    return out


def scenario_suite() -> dict[str, Scenario]:
    """Named scenarios used by the acceptance tests and the ``sweep`` command."""
    obj = ShapeSpec(kind="rect", width=20, height=20, texture_seed=11)
    return {
        "linear": Scenario(
            num_frames=30, object=obj,
            trajectory=TrajectorySpec(start=(16.0, 30.0), velocity=(2.0, 1.0)),
            seed=1, name="linear",
        ),
        "occlusion": Scenario(
            num_frames=34, object=obj,
            trajectory=TrajectorySpec(start=(14.0, 24.0), velocity=(2.0, 1.0)),
            occlusions=((14, 18),), seed=2, name="occlusion",
        ),
        "reappear-far": Scenario(
            num_frames=26,
            object=ShapeSpec(kind="disc", radius=8, texture_seed=12),
            trajectory=TrajectorySpec(start=(12.0, 40.0), velocity=(3.0, 0.0)),
            occlusions=((10, 16),), seed=3, name="reappear-far",
        ),
        "sinusoidal": Scenario(
            num_frames=40, object=obj,
            trajectory=TrajectorySpec(
                kind="sinusoidal", start=(16.0, 48.0), velocity=(1.5, 0.0), amplitude=(0.0, 20.0), period=24.0
            ),
            seed=4, name="sinusoidal",
        ),
        "distractor": Scenario(
            num_frames=30, object=obj,
            trajectory=TrajectorySpec(start=(16.0, 24.0), velocity=(2.0, 1.0)),
            distractors=(Distractor(ShapeSpec(kind="rect", width=20, height=20, texture_seed=13), (70.0, 70.0)),),
            seed=5, name="distractor",
        ),
    }


def write_scenario(s: Scenario, out_dir) -> Path:
    """Write ``frames/``, ``gt_masks/`` (PGM) and ``manifest.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    (out_dir / "frames").mkdir(parents=True, exist_ok=True)
    (out_dir / "gt_masks").mkdir(parents=True, exist_ok=True)
    for frame, gt in generate_scenario(s):
        save_gray(frame.intensity, out_dir / "frames" / frame_filename(gt.frame_index))
        save_mask(gt.mask, out_dir / "gt_masks" / frame_filename(gt.frame_index))
    manifest = {
        "width": s.width,
        "height": s.height,
        "num_frames": s.num_frames,
        "occlusions": [list(o) for o in s.occlusions],
        "trajectory": asdict(s.trajectory),
        "seed": s.seed,
        "scenario": s.to_dict(),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def load_manifest(path) -> Scenario:
    data = json.loads(Path(path).read_text())
    if "scenario" not in data:
        raise ScenarioError("scenario", f"{path} has no embedded scenario description")
    return Scenario.from_dict(data["scenario"])
