"""Binary masks, probability maps and the small geometry kit built on them.

Arrays are indexed ``[y, x]``; points and boxes are expressed as ``(x, y)``
with pixel ``(x, y)`` centred at integer coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
from PIL import Image


class EmptyMaskError(ValueError):
    """Raised when an operation needs foreground pixels and the mask has none."""


class Point(NamedTuple):
    x: float
    y: float


class Box(NamedTuple):
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    @property
    def center(self) -> Point:
        return Point((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    @property
    def area(self) -> int:
        return (self.x_max - self.x_min + 1) * (self.y_max - self.y_min + 1)

    def clip(self, width: int, height: int) -> "Box":
        return Box(
            min(max(self.x_min, 0), width - 1),
            min(max(self.y_min, 0), height - 1),
            min(max(self.x_max, 0), width - 1),
            min(max(self.y_max, 0), height - 1),
        )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mask:
    """Single-object binary mask. ``cells`` is a read-only ``(height, width)`` bool array."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool)
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2D grid, got shape {cells.shape}")
        object.__setattr__(self, "cells", _frozen(cells.copy()))

    @classmethod
    def empty(cls, width: int, height: int) -> "Mask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_pixels(cls, pixels: Iterable[tuple[int, int]], width: int, height: int) -> "Mask":
        cells = np.zeros((height, width), dtype=bool)
        for x, y in pixels:
            cells[y, x] = True
        return cls(cells)

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    @property
    def area(self) -> int:
        return int(self.cells.sum())

    def is_empty(self) -> bool:
        return not self.cells.any()

    def pixels(self) -> set[tuple[int, int]]:
        ys, xs = np.nonzero(self.cells)
        return set(zip(xs.tolist(), ys.tolist()))

    def translate(self, dx: int, dy: int) -> "Mask":
        """Shift by an integer offset; pixels leaving the frame are dropped."""
        out = np.zeros_like(self.cells)
        h, w = self.cells.shape
        if abs(dx) >= w or abs(dy) >= h:
            return Mask(out)
        src = self.cells[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)]
        out[max(0, dy):max(0, dy) + src.shape[0], max(0, dx):max(0, dx) + src.shape[1]] = src
        return Mask(out)

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return self.cells.shape == other.cells.shape and bool(np.array_equal(self.cells, other.cells))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ProbMap:
    """Per-pixel foreground confidence in ``[0, 1]``."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"probability map must be a non-empty 2D grid, got shape {values.shape}")
        if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("probability values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(values.copy()))

    @classmethod
    def from_mask(cls, mask: Mask) -> "ProbMap":
        return cls(mask.cells.astype(np.float64))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def threshold(self, level: float = 0.5) -> Mask:
        return Mask(self.values > level)


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[1]}x{a.shape[0]} vs {b.shape[1]}x{b.shape[0]}")


def iou(a: Mask, b: Mask) -> float:
    """Intersection over union; two empty masks agree perfectly (1.0)."""
    _check_same_shape(a, b)
    union = np.count_nonzero(a.cells | b.cells)
    if union == 0:
        return 1.0
    return np.count_nonzero(a.cells & b.cells) / union


def centroid(m: Mask) -> Point:
    ys, xs = np.nonzero(m.cells)
    if xs.size == 0:
        raise EmptyMaskError("centroid of an empty mask is undefined")
    return Point(float(xs.mean()), float(ys.mean()))


def bounding_box(m: Mask) -> Box:
    ys, xs = np.nonzero(m.cells)
    if xs.size == 0:
        raise EmptyMaskError("bounding box of an empty mask is undefined")
    return Box(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))


def boundary_array(cells: np.ndarray) -> np.ndarray:
    """Foreground pixels with a 4-neighbour that is background or outside the frame."""
    cells = np.asarray(cells, dtype=bool)
    padded = np.pad(cells, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return cells & ~interior


def boundary_pixels(m: Mask) -> set[tuple[int, int]]:
    ys, xs = np.nonzero(boundary_array(m.cells))
    return set(zip(xs.tolist(), ys.tolist()))


def disc_offsets(radius: float) -> list[tuple[int, int]]:
    """Integer offsets ``(dx, dy)`` with ``dx**2 + dy**2 <= radius**2``."""
    r = int(math.floor(radius))
    r2 = radius * radius
    return [(dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1) if dx * dx + dy * dy <= r2]


def dilate_array(cells: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean-disc dilation of a bool grid; nothing is added outside the grid."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    cells = np.asarray(cells, dtype=bool)
    r = int(math.floor(radius))
    if r == 0:
        return cells.copy()
    h, w = cells.shape
    padded = np.pad(cells, r, constant_values=False)
    out = np.zeros_like(cells)
    for dx, dy in disc_offsets(radius):
        out |= padded[r - dy:r - dy + h, r - dx:r - dx + w]
    return out


def erode_array(cells: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean-disc erosion; out-of-frame pixels count as foreground."""
    cells = np.asarray(cells, dtype=bool)
    r = int(math.floor(radius))
    if r == 0:
        return cells.copy()
    h, w = cells.shape
    padded = np.pad(cells, r, constant_values=True)
    out = np.ones_like(cells)
    for dx, dy in disc_offsets(radius):
        out &= padded[r - dy:r - dy + h, r - dx:r - dx + w]
    return out


def dilate(pixels: Iterable[tuple[int, int]], radius: float, bounds: tuple[int, int]) -> set[tuple[int, int]]:
    """Union of Euclidean discs around each pixel, clipped to ``bounds = (width, height)``."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    width, height = bounds
    offsets = disc_offsets(radius)
    out = set()
    for x, y in pixels:
        for dx, dy in offsets:
            nx, ny = x + dx, y + dy
            if 0 <= nx < width and 0 <= ny < height:
                out.add((nx, ny))
    return out


# -- PGM I/O ---------------------------------------------------------------

def frame_filename(index: int, suffix: str = ".pgm") -> str:
    return f"{index:05d}{suffix}"


def save_mask(mask: Mask, path) -> None:
    Image.fromarray(mask.cells.astype(np.uint8) * 255).save(Path(path), format="PPM")


def load_mask(path) -> Mask:
    with Image.open(Path(path)) as im:
        return Mask(np.asarray(im.convert("L")) > 127)


def save_prob(prob: ProbMap, path) -> None:
    data = np.rint(prob.values * 255.0).astype(np.uint8)
    Image.fromarray(data).save(Path(path), format="PPM")


def load_prob(path) -> ProbMap:
    with Image.open(Path(path)) as im:
        return ProbMap(np.asarray(im.convert("L"), dtype=np.float64) / 255.0)


def save_gray(values: np.ndarray, path) -> None:
    """Write a ``[0, 1]`` float grid as an 8-bit PGM."""
    data = np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data).save(Path(path), format="PPM")


def load_gray(path) -> np.ndarray:
    with Image.open(Path(path)) as im:
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
