"""Dense motion: optical flow, mask-restricted flow, forward mask warping, box prompts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from . import kernels
from .masks import (
    Box,
    EmptyMaskError,
    Mask,
    bounding_box,
    dilate_array,
    erode_array,
    save_gray,
)


@dataclass(frozen=True, eq=False)
class Frame:
    """Grayscale video frame with intensities in ``[0, 1]``."""

    intensity: np.ndarray
    index: int = 0

    def __post_init__(self):
        data = np.asarray(self.intensity, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"frame must be a non-empty 2D grid, got shape {data.shape}")
        if not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("frame intensities must lie in [0, 1]")
        data = np.ascontiguousarray(data.copy())
        data.setflags(write=False)
        object.__setattr__(self, "intensity", data)

    @property
    def width(self) -> int:
        return self.intensity.shape[1]

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.intensity.shape


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-pixel displacement ``(u, v)`` accumulated over ``dt`` frames."""

    u: np.ndarray
    v: np.ndarray
    dt: int = 1

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.shape != v.shape or u.ndim != 2:
            raise ValueError("u and v must be 2D grids of the same shape")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("flow values must be finite")
        if self.dt < 1:
            raise ValueError("dt must be >= 1")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @classmethod
    def zeros(cls, width: int, height: int, dt: int = 1) -> "FlowField":
        return cls(np.zeros((height, width)), np.zeros((height, width)), dt)

    @classmethod
    def uniform(cls, width: int, height: int, u: float, v: float, dt: int = 1) -> "FlowField":
        return cls(np.full((height, width), float(u)), np.full((height, width), float(v)), dt)


class FlowEstimator(Protocol):
    def __call__(self, prev: Frame, cur: Frame) -> FlowField: ...


# -- pyramidal Lucas-Kanade --------------------------------------------------

def _downsample(img: np.ndarray) -> np.ndarray | None:
    h, w = img.shape
    h2, w2 = h // 2, w // 2
    if h2 < 1 or w2 < 1:
        return None
    return img[:2 * h2, :2 * w2].reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def _upsample_flow(f: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    up = np.repeat(np.repeat(f, 2, axis=0), 2, axis=1) * 2.0
    h, w = shape
    up = np.pad(up, ((0, max(0, h - up.shape[0])), (0, max(0, w - up.shape[1]))), mode="edge")
    return up[:h, :w]


def _binomial3(img: np.ndarray) -> np.ndarray:
    p = np.pad(img, 1, mode="edge")
    rows = 0.25 * p[:, :-2] + 0.5 * p[:, 1:-1] + 0.25 * p[:, 2:]
    return 0.25 * rows[:-2] + 0.5 * rows[1:-1] + 0.25 * rows[2:]


def _gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.pad(img, 1, mode="edge")
    ix = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    iy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return ix, iy


def estimate_flow(
    prev: Frame,
    cur: Frame,
    levels: int = 3,
    window: int = 5,
    iterations: int = 3,
    min_eig: float = 1e-6,
    backend=None,
) -> FlowField:
    """Dense flow mapping ``prev`` to ``cur`` by pyramidal Lucas-Kanade.

    Coarse levels are 2x2 box averages of the finer level followed by a 3x3
    binomial blur. On each level, central-difference gradients of ``prev``
    and ``iterations`` warp-and-solve refinements per pixel. Each refinement
    step is clipped to the window half-width, so a displacement is bounded by
    ``half_width * iterations * (2**levels - 1)``.
    """
    if prev.shape != cur.shape:
        raise ValueError(f"dimension mismatch: {prev.shape} vs {cur.shape}")
    k = backend if backend is not None else kernels
    radius = window // 2
    max_step = float(max(radius, 1))

    pyr_prev = [prev.intensity]
    pyr_cur = [cur.intensity]
    for _ in range(levels - 1):
        a, b = _downsample(pyr_prev[-1]), _downsample(pyr_cur[-1])
        if a is None or min(a.shape) < window:
            break
        pyr_prev.append(_binomial3(a))
        pyr_cur.append(_binomial3(b))

    u = np.zeros(pyr_prev[-1].shape)
    v = np.zeros(pyr_prev[-1].shape)
    for lvl in range(len(pyr_prev) - 1, -1, -1):
        p_img, c_img = pyr_prev[lvl], pyr_cur[lvl]
        if u.shape != p_img.shape:
            u = _upsample_flow(u, p_img.shape)
            v = _upsample_flow(v, p_img.shape)
        ix, iy = _gradients(p_img)
        u, v = k.lk_refine(p_img, c_img, ix, iy, u, v, radius, iterations, min_eig, max_step)
    return FlowField(u, v, 1)


def motion_flow(older: Frame, recent: Frame, dt: int = 1, estimator: FlowEstimator | None = None) -> FlowField:
    """Forward motion per pixel of ``recent``, measured against ``older`` (``dt`` frames earlier).

    Flow is estimated recent -> older and negated, so the field lives on the
    grid where the most recent mask is defined.
    """
    est = estimator or estimate_flow
    back = est(recent, older)
    return FlowField(-back.u, -back.v, dt)


def masked_flow(flow: FlowField, m: Mask) -> tuple[FlowField, tuple[float, float]]:
    if flow.shape != m.shape:
        raise ValueError(f"dimension mismatch: {flow.shape} vs {m.shape}")
    if m.is_empty():
        raise EmptyMaskError("cannot mask flow with an empty mask")
    ind = m.cells
    u = np.where(ind, flow.u, 0.0)
    v = np.where(ind, flow.v, 0.0)
    mean = (float(flow.u[ind].mean()), float(flow.v[ind].mean()))
    return FlowField(u, v, flow.dt), mean


def warp_mask_forward(m: Mask, flow: FlowField, horizon: int = 1) -> Mask:
    """Splat each foreground pixel along its per-step flow, then close with a radius-1 disc."""
    if flow.shape != m.shape:
        raise ValueError(f"dimension mismatch: {flow.shape} vs {m.shape}")
    if m.is_empty():
        raise EmptyMaskError("cannot warp an empty mask")
    h, w = m.shape
    ys, xs = np.nonzero(m.cells)
    scale = horizon / flow.dt
    nx = np.floor(xs + flow.u[ys, xs] * scale + 0.5).astype(np.intp)
    ny = np.floor(ys + flow.v[ys, xs] * scale + 0.5).astype(np.intp)
    keep = (nx >= 0) & (nx < w) & (ny >= 0) & (ny < h)
    if not keep.any():
        raise EmptyMaskError("warped mask left the frame")
    out = np.zeros((h, w), dtype=bool)
    out[ny[keep], nx[keep]] = True
    out = erode_array(dilate_array(out, 1), 1)
    return Mask(out)


def flow_box_prompt(warped: Mask, bounds: tuple[int, int]) -> Box:
    width, height = bounds
    return bounding_box(warped).clip(width, height)


def save_flow(flow: FlowField, directory, stem: str = "flow") -> None:
    """Write ``u`` and ``v`` as 8-bit PGMs plus a JSON sidecar with the affine mapping back."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {"dt": flow.dt}
    for name, grid in (("u", flow.u), ("v", flow.v)):
        lo, hi = float(grid.min()), float(grid.max())
        span = hi - lo if hi > lo else 1.0
        save_gray((grid - lo) / span, directory / f"{stem}_{name}.pgm")
        # value = lo + pixel / 255 * span
        meta[name] = {"offset": lo, "scale": span / 255.0}
    (directory / f"{stem}.json").write_text(json.dumps(meta, indent=2))
