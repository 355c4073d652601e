"""Segmenter interface and the two reference segmenters the pipeline can drive."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from . import kernels
from .flow import Frame
from .masks import Box, Mask, Point, ProbMap, bounding_box, dilate_array, iou
from .memory import FrameScores, MemoryBank
from .simulator import GroundTruthRecord


@dataclass(frozen=True, eq=False)
class PromptSet:
    positive_points: tuple[Point, ...] = ()
    box: Box | None = None
    first_frame_mask: Mask | None = None

    def is_empty(self) -> bool:
        return not self.positive_points and self.box is None and self.first_frame_mask is None


@dataclass(frozen=True, eq=False)
class SegmenterOutput:
    prob: ProbMap
    mask: Mask
    scores: FrameScores

    @classmethod
    def from_prob(cls, prob: ProbMap, scores: FrameScores) -> "SegmenterOutput":
        return cls(prob, prob.threshold(0.5), scores)

    @classmethod
    def absent(cls, width: int, height: int, s_iou: float, s_occ: float) -> "SegmenterOutput":
        return cls(ProbMap(np.zeros((height, width))), Mask.empty(width, height), FrameScores(s_iou, s_occ))


class Segmenter(Protocol):
    """Anything that turns a frame, its prompts and the memory bank into a mask.

    Implementations must be deterministic for identical call sequences, and a
    negative ``s_occ`` means the object is reported absent.
    """

    def segment(self, frame: Frame, prompts: PromptSet, bank: MemoryBank) -> SegmenterOutput: ...

    def reset(self) -> None: ...


def _check_dims(frame: Frame, bank: MemoryBank | None):
    if bank is not None and bank.entries and bank.entries[0].mask.shape != frame.shape:
        raise ValueError(f"dimension mismatch: frame {frame.shape} vs memory {bank.entries[0].mask.shape}")


# -- ground-truth oracle -----------------------------------------------------

@dataclass(frozen=True)
class OracleConfig:
    boundary_noise: int = 1
    flip_probability: float = 0.15
    reacquire_box_iou: float = 0.3
    score_noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.boundary_noise < 0 or self.score_noise < 0:
            raise ValueError("noise amplitudes must be >= 0")
        if not 0.0 <= self.reacquire_box_iou <= 1.0:
            raise ValueError("reacquire_box_iou must lie in [0, 1]")


def box_iou(a: Box, b: Box) -> float:
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min) + 1
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min) + 1
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def prompt_hits(prompts: PromptSet, gt: Mask, box_iou_min: float) -> bool:
    """True when a positive point lands on the object or the box overlaps its box enough."""
    if gt.is_empty():
        return False
    h, w = gt.shape
    for p in prompts.positive_points:
        x, y = math.floor(p.x + 0.5), math.floor(p.y + 0.5)
        if 0 <= x < w and 0 <= y < h and gt.cells[y, x]:
            return True
    if prompts.box is not None and box_iou(prompts.box, bounding_box(gt)) >= box_iou_min:
        return True
    return False


def perturb_boundary(gt: Mask, amplitude: int, flip_probability: float, rng: np.random.Generator) -> Mask:
    """Randomly drop pixels near the inner boundary and add pixels in the outer band."""
    if amplitude == 0 or gt.is_empty():
        return gt
    cells = gt.cells
    inner = cells & ~_erode_plain(cells, amplitude)
    outer = dilate_array(cells, amplitude) & ~cells
    drop = inner & (rng.random(cells.shape) < flip_probability)
    add = outer & (rng.random(cells.shape) < flip_probability)
    out = (cells & ~drop) | add
    if not out.any():
        return gt
    return Mask(out)


def _erode_plain(cells, radius):
    # erosion with background outside the frame
    return ~dilate_array(~np.pad(cells, radius, constant_values=False), radius)[radius:-radius, radius:-radius]


class OracleSegmenter:
    """Returns (noisy) ground truth while the object is tracked or a prompt hits it.

    Tracking is sticky across consecutive successes. After an occlusion the
    object stays lost until a prompt lands on it.
    """

    name = "oracle"

    def __init__(self, gt: Sequence[GroundTruthRecord], cfg: OracleConfig | None = None):
        self.gt = {r.frame_index: r for r in gt}
        self.cfg = cfg or OracleConfig()
        self.tracked = False

    def reset(self) -> None:
        self.tracked = False

    def segment(self, frame: Frame, prompts: PromptSet, bank: MemoryBank | None = None) -> SegmenterOutput:
        _check_dims(frame, bank)
        rec = self.gt[frame.index]
        h, w = frame.shape
        if rec.occluded or rec.mask.is_empty():
            self.tracked = False
            return SegmenterOutput.absent(w, h, 0.1, -0.5)
        if prompts.first_frame_mask is not None:
            self.tracked = True
            m = prompts.first_frame_mask
            return SegmenterOutput(ProbMap.from_mask(m), m, FrameScores(1.0, 0.5))
        if not (self.tracked or prompt_hits(prompts, rec.mask, self.cfg.reacquire_box_iou)):
            return SegmenterOutput.absent(w, h, 0.1, -0.3)
        self.tracked = True
        rng = np.random.default_rng([self.cfg.seed, frame.index])
        noisy = perturb_boundary(rec.mask, self.cfg.boundary_noise, self.cfg.flip_probability, rng)
        s_iou = iou(noisy, rec.mask) - rng.uniform(0.0, self.cfg.score_noise)
        return SegmenterOutput(ProbMap.from_mask(noisy), noisy, FrameScores(min(max(s_iou, 0.0), 1.0), 0.5))


# -- NCC template matcher ----------------------------------------------------

@dataclass(frozen=True)
class MatcherConfig:
    search_radius: int = 16
    vote_threshold: float = 0.5


@dataclass
class EntryMatch:
    frame_index: int
    score: float
    dx: int
    dy: int
    mask: Mask | None = field(default=None, repr=False)


class MatcherSegmenter:
    """Segments by locating every memory entry's appearance patch with NCC and voting.

    Each entry's patch (its mask's bounding box in its source frame) is
    searched within ``search_radius`` of a location cue: the box-prompt
    centre and/or the first positive point when prompts exist, otherwise the
    entry's own box centre. The entry's mask, shifted by the best offset, is
    one vote; pixels with more than ``vote_threshold`` of the votes form the
    mask. Entries with empty masks vote for nothing. A best correlation below
    0.5 means the object is reported absent.
    """

    name = "matcher"

    def __init__(self, cfg: MatcherConfig | None = None, backend=None):
        self.cfg = cfg or MatcherConfig()
        self.kernels = backend if backend is not None else kernels
        self.last_matches: list[EntryMatch] = []

    def reset(self) -> None:
        self.last_matches = []

    def _centers(self, prompts: PromptSet) -> list[Point]:
        out = []
        if prompts.box is not None:
            out.append(prompts.box.center)
        if prompts.positive_points:
            out.append(prompts.positive_points[0])
        return out

    def match_entry(self, frame: Frame, entry, centers: list[Point]) -> EntryMatch:
        if entry.mask.is_empty():
            return EntryMatch(entry.frame_index, float("-inf"), 0, 0, None)
        box = bounding_box(entry.mask)
        patch = entry.appearance.intensity[box.y_min:box.y_max + 1, box.x_min:box.x_max + 1]
        own = box.center
        r = self.cfg.search_radius
        best = (float("-inf"), 0, 0)
        for c in centers or [own]:
            ox = int(round(c.x - own.x))
            oy = int(round(c.y - own.y))
            found = self.kernels.ncc_search(
                frame.intensity, patch, box.x_min, box.y_min, ox - r, ox + r, oy - r, oy + r
            )
            if found[0] > best[0]:
                best = found
        score, dx, dy = best
        if not math.isfinite(score):
            return EntryMatch(entry.frame_index, score, 0, 0, None)
        return EntryMatch(entry.frame_index, score, dx, dy, entry.mask.translate(dx, dy))

    def segment(self, frame: Frame, prompts: PromptSet, bank: MemoryBank) -> SegmenterOutput:
        if bank is None or not bank.entries:
            raise ValueError("matcher needs a non-empty memory bank")
        _check_dims(frame, bank)
        h, w = frame.shape
        if prompts.first_frame_mask is not None:
            m = prompts.first_frame_mask
            self.last_matches = []
            return SegmenterOutput(ProbMap.from_mask(m), m, FrameScores(1.0, 0.5))

        centers = self._centers(prompts)
        matches = [self.match_entry(frame, e, centers) for e in bank.entries]
        self.last_matches = matches
        votes = np.zeros((h, w))
        placed = [m.mask for m in matches if m.mask is not None]
        for m in placed:
            votes += m.cells
        prob = votes / len(bank.entries)

        best = max((m.score for m in matches), default=float("-inf"))
        s_occ = (best if math.isfinite(best) else 0.0) - 0.5
        if len(placed) >= 2:
            pairs = [iou(a, b) for i, a in enumerate(placed) for b in placed[i + 1:]]
            s_iou = float(np.mean(pairs))
        elif len(placed) == 1:
            s_iou = 1.0
        else:
            s_iou = 0.0
        if s_occ < 0:
            return SegmenterOutput.absent(w, h, s_iou, s_occ)
        prob_map = ProbMap(np.clip(prob, 0.0, 1.0))
        return SegmenterOutput(prob_map, Mask(prob > self.cfg.vote_threshold), FrameScores(s_iou, s_occ))


def make_segmenter(name: str, gt=None, seed: int = 0, backend=None):
    if name == "oracle":
        if gt is None:
            raise ValueError("the oracle segmenter needs ground truth")
        return OracleSegmenter(gt, OracleConfig(seed=seed))
    if name == "matcher":
        return MatcherSegmenter(backend=backend)
    raise ValueError(f"unknown segmenter {name!r}; expected 'oracle' or 'matcher'")
