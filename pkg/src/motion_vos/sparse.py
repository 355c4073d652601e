"""Sparse motion: geometric keypoints, constant-velocity extrapolation, point prompts."""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass

from .masks import EmptyMaskError, Mask, Point, bounding_box, centroid

DIRECTIONS = ("up", "down", "left", "right")
_STEP = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}
VALID_COUNTS = (1, 3, 5, 7, 9)


@dataclass(frozen=True)
class KeyPointSet:
    """Keypoints in fixed order: centroid, then directional points (see :func:`extract_keypoints`)."""

    points: tuple[Point, ...]
    frame_index: int
    fallback: bool = False

    def __post_init__(self):
        for p in self.points:
            if not (math.isfinite(p.x) and math.isfinite(p.y)):
                raise ValueError("keypoints must be finite")

    def __len__(self) -> int:
        return len(self.points)


class MotionHistory:
    """Most recent keypoint sets, oldest first, with strictly increasing frame indices."""

    def __init__(self, capacity: int = 2):
        if capacity < 2:
            raise ValueError("capacity must be >= 2 to extrapolate")
        self.capacity = capacity
        self.recent: deque[KeyPointSet] = deque(maxlen=capacity)

    def append(self, kp: KeyPointSet) -> None:
        if self.recent and kp.frame_index <= self.recent[-1].frame_index:
            raise ValueError("keypoint sets must arrive in increasing frame order")
        if self.recent and len(kp) != len(self.recent[-1]):
            raise ValueError("keypoint count changed between frames")
        self.recent.append(kp)

    def __len__(self) -> int:
        return len(self.recent)

    @property
    def last(self) -> KeyPointSet | None:
        return self.recent[-1] if self.recent else None


def _ray_exit(cells, x0: int, y0: int, step: tuple[int, int]) -> tuple[int, int]:
    # last contiguous foreground pixel walking from (x0, y0)
    h, w = cells.shape
    dx, dy = step
    x, y = x0, y0
    while 0 <= x + dx < w and 0 <= y + dy < h and cells[y + dy, x + dx]:
        x += dx
        y += dy
    return x, y


def extract_keypoints(m: Mask, count: int = 5, frame_index: int = 0) -> KeyPointSet:
    """Centroid plus points along the four axis rays from it.

    Each ray runs from the centroid's pixel to the last contiguous foreground
    pixel; the directional keypoint sits halfway along it. Counts above 5 add
    points at 1/4 of each ray, then 3/4, cycling up, down, left, right. If the
    centroid pixel is background, the rays end at the bounding-box edges and
    the result is flagged ``fallback``.
    """
    if count not in VALID_COUNTS:
        raise ValueError(f"keypoint count must be one of {VALID_COUNTS}, got {count}")
    if m.is_empty():
        raise EmptyMaskError("cannot extract keypoints from an empty mask")
    c = centroid(m)
    px, py = math.floor(c.x + 0.5), math.floor(c.y + 0.5)
    inside = bool(m.cells[py, px])
    if inside:
        exits = {d: _ray_exit(m.cells, px, py, _STEP[d]) for d in DIRECTIONS}
        ends = {
            "up": (c.x, exits["up"][1]),
            "down": (c.x, exits["down"][1]),
            "left": (exits["left"][0], c.y),
            "right": (exits["right"][0], c.y),
        }
    else:
        box = bounding_box(m)
        ends = {
            "up": (c.x, box.y_min),
            "down": (c.x, box.y_max),
            "left": (box.x_min, c.y),
            "right": (box.x_max, c.y),
        }

    def along(d, frac):
        ex, ey = ends[d]
        return Point(c.x + frac * (ex - c.x), c.y + frac * (ey - c.y))

    pts = [c]
    pts += [along(d, 0.5) for d in DIRECTIONS[: min(count - 1, 4)]]
    extra = [along(d, f) for f in (0.25, 0.75) for d in DIRECTIONS]
    pts += extra[: max(count - 5, 0)]
    return KeyPointSet(tuple(pts), frame_index, fallback=not inside)


def extrapolate_keypoints(history: MotionHistory, horizon: int = 1) -> KeyPointSet:
    """Constant-velocity prediction ``horizon`` frames past the newest entry."""
    if len(history) < 2:
        raise ValueError("need at least two keypoint sets to extrapolate")
    older, newer = history.recent[-2], history.recent[-1]
    gap = newer.frame_index - older.frame_index
    pts = []
    for a, b in zip(older.points, newer.points):
        vx, vy = (b.x - a.x) / gap, (b.y - a.y) / gap
        pts.append(Point(b.x + vx * horizon, b.y + vy * horizon))
    return KeyPointSet(tuple(pts), newer.frame_index + horizon, newer.fallback)


def keypoints_to_point_prompts(kp: KeyPointSet, bounds: tuple[int, int]) -> list[Point]:
    """Clamp each keypoint into the frame; all are used as positive points."""
    width, height = bounds
    return [Point(min(max(p.x, 0.0), width - 1.0), min(max(p.y, 0.0), height - 1.0)) for p in kp.points]


def write_keypoint_trace(sets, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_index", "point_index", "x", "y"])
        for kp in sets:
            for i, p in enumerate(kp.points):
                w.writerow([kp.frame_index, i, f"{p.x:.6g}", f"{p.y:.6g}"])
