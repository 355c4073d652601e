"""Region similarity (J), contour accuracy (F) and their sequence aggregate."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .masks import Mask, boundary_array, dilate_array, iou

BOUNDARY_FRACTION = 0.008


def default_tolerance(width: int, height: int) -> int:
    return math.ceil(BOUNDARY_FRACTION * math.hypot(width, height))


def j_score(pred: Mask, gt: Mask) -> float:
    return iou(pred, gt)


def f_score(pred: Mask, gt: Mask, tolerance: float | None = None) -> float:
    """Boundary F-measure; a predicted boundary pixel counts if a GT one lies within ``tolerance``."""
    if pred.shape != gt.shape:
        raise ValueError(f"dimension mismatch: {pred.shape} vs {gt.shape}")
    if tolerance is None:
        tolerance = default_tolerance(gt.width, gt.height)
    bp = boundary_array(pred.cells)
    bg = boundary_array(gt.cells)
    n_p, n_g = int(bp.sum()), int(bg.sum())
    if n_p == 0 and n_g == 0:
        return 1.0
    if n_p == 0 or n_g == 0:
        return 0.0
    precision = np.count_nonzero(bp & dilate_array(bg, tolerance)) / n_p
    recall = np.count_nonzero(bg & dilate_array(bp, tolerance)) / n_g
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass
class FrameResult:
    frame_index: int
    j: float
    f: float
    occluded: bool = False


@dataclass
class MetricsReport:
    per_frame: list[FrameResult] = field(default_factory=list)
    mean_j: float = 0.0
    mean_f: float = 0.0
    j_and_f: float = 0.0
    frames_evaluated: int = 0

    def summary(self) -> dict:
        return {
            "mean_j": self.mean_j,
            "mean_f": self.mean_f,
            "j_and_f": self.j_and_f,
            "frames": self.frames_evaluated,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame_index", "j", "f"])
            for r in self.per_frame:
                w.writerow([r.frame_index, f"{r.j:.6f}", f"{r.f:.6f}"])
            w.writerow(["mean", f"{self.mean_j:.6f}", f"{self.mean_f:.6f}"])

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def evaluate_frame(pred: Mask, gt: Mask, frame_index: int, occluded: bool = False, tolerance=None) -> FrameResult:
    return FrameResult(frame_index, j_score(pred, gt), f_score(pred, gt, tolerance), occluded)


def aggregate(results: Iterable[FrameResult], exclude_occluded: bool = False) -> MetricsReport:
    """Average per-frame scores. Occluded frames count (empty vs empty scores 1) unless excluded."""
    results = list(results)
    if not results:
        raise ValueError("no frames to aggregate")
    used = [r for r in results if not (exclude_occluded and r.occluded)]
    if not used:
        raise ValueError("every frame was excluded")
    mean_j = float(np.mean([r.j for r in used]))
    mean_f = float(np.mean([r.f for r in used]))
    return MetricsReport(results, mean_j, mean_f, (mean_j + mean_f) / 2.0, len(used))


def evaluate_sequence(preds, gts, occluded=None, exclude_occluded=False, tolerance=None, first_index=0) -> MetricsReport:
    preds, gts = list(preds), list(gts)
    if len(preds) != len(gts):
        raise ValueError(f"frame count mismatch: {len(preds)} predictions vs {len(gts)} ground-truth masks")
    occluded = list(occluded) if occluded is not None else [g.is_empty() for g in gts]
    results = [
        evaluate_frame(p, g, first_index + i, occ, tolerance)
        for i, (p, g, occ) in enumerate(zip(preds, gts, occluded))
    ]
    return aggregate(results, exclude_occluded)
