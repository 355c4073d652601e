"""Memory bank and confidence-driven frame/pixel selection.

The bank always keeps the first prompted frame. Past frames are either kept
first-in-first-out (``fifo``) or chosen by the two-tier temporal policy with
per-pixel filtering (``stms``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .flow import Frame
from .masks import Mask, ProbMap


@dataclass(frozen=True)
class FrameScores:
    s_iou: float
    s_occ: float

    def __post_init__(self):
        if not (0.0 <= self.s_iou <= 1.0):
            raise ValueError(f"s_iou must lie in [0, 1], got {self.s_iou}")
        if not math.isfinite(self.s_occ):
            raise ValueError("s_occ must be finite")


@dataclass(frozen=True, eq=False)
class FrameRecord:
    """What the pipeline remembers about one segmented frame."""

    frame_index: int
    prob: ProbMap
    scores: FrameScores
    appearance: Frame


@dataclass(frozen=True, eq=False)
class MemoryEntry:
    frame_index: int
    filtered_map: ProbMap
    mask: Mask
    appearance: Frame
    scores: FrameScores
    is_first_frame: bool = False


@dataclass(frozen=True)
class SelectionConfig:
    tau_iou: float = 0.7
    tau_occ: float = 0.0
    tau_rank: float = 0.6
    tau_pix: float = 0.5
    sample_interval: int = 1
    window: int | None = None  # None: 2 * capacity * sample_interval
    capacity: int = 7

    def __post_init__(self):
        for name in ("tau_iou", "tau_occ", "tau_rank", "tau_pix"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.sample_interval < 1:
            raise ValueError("sample_interval must be >= 1")
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if self.window is not None and self.window < self.sample_interval:
            raise ValueError("window must be >= sample_interval")

    @property
    def effective_window(self) -> int:
        if self.window is not None:
            return self.window
        return 2 * self.capacity * self.sample_interval


@dataclass
class MemoryBank:
    capacity: int = 7
    entries: list[MemoryEntry] = field(default_factory=list)

    @property
    def first(self) -> MemoryEntry:
        for e in self.entries:
            if e.is_first_frame:
                return e
        raise LookupError("memory bank not initialised")

    def frame_indices(self) -> list[int]:
        return [e.frame_index for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def check(self) -> None:
        """Raise ``AssertionError`` if a structural invariant is broken."""
        assert len(self.entries) <= self.capacity, "bank over capacity"
        assert sum(e.is_first_frame for e in self.entries) == 1, "bank must hold exactly one first-frame entry"
        idx = self.frame_indices()
        assert len(idx) == len(set(idx)), "duplicate frame indices in bank"


def initial_bank(frame: Frame, mask: Mask, capacity: int = 7) -> MemoryBank:
    entry = MemoryEntry(
        frame_index=frame.index,
        filtered_map=ProbMap.from_mask(mask),
        mask=mask,
        appearance=frame,
        scores=FrameScores(1.0, 1.0),
        is_first_frame=True,
    )
    return MemoryBank(capacity, [entry])


# -- selection -------------------------------------------------------------

def sample_candidates(
    history: Sequence[FrameRecord], cfg: SelectionConfig, current_frame: int, first_frame: int = 0
) -> list[FrameRecord]:
    """Past frames inside the window at offsets that are multiples of the sampling interval."""
    lo = current_frame - cfg.effective_window
    out = []
    for rec in history:
        t = rec.frame_index
        if t == first_frame or t < lo or t >= current_frame:
            continue
        if (current_frame - t) % cfg.sample_interval == 0:
            out.append(rec)
    return out


@dataclass
class Selection:
    tier1: list[int] = field(default_factory=list)
    tier2: list[int] = field(default_factory=list)
    rejected: list[tuple[int, str]] = field(default_factory=list)

    @property
    def chosen(self) -> list[int]:
        return self.tier1 + self.tier2


def select_frames(candidates: Iterable[tuple[int, FrameScores]], cfg: SelectionConfig, slots: int) -> Selection:
    """Two-tier choice with the reason each unchosen candidate was dropped."""
    cands = sorted(candidates, key=lambda c: c[0], reverse=True)
    sel = Selection()
    rest = []
    for t, sc in cands:
        if sc.s_iou > cfg.tau_iou and sc.s_occ > cfg.tau_occ and len(sel.tier1) < slots:
            sel.tier1.append(t)
        else:
            rest.append((t, sc))
    ranked = sorted(
        (c for c in rest if c[1].s_iou > cfg.tau_rank),
        key=lambda c: (c[1].s_iou + c[1].s_occ, c[0]),
        reverse=True,
    )
    free = max(slots - len(sel.tier1), 0)
    sel.tier2 = [t for t, _ in ranked[:free]]
    taken = set(sel.tier2)
    for t, sc in rest:
        if t in taken:
            continue
        reason = "low_iou" if sc.s_iou <= cfg.tau_rank else "no_slot"
        sel.rejected.append((t, reason))
    return sel


def temporal_select(candidates: Iterable[tuple[int, FrameScores]], cfg: SelectionConfig, slots: int) -> list[int]:
    """Frame indices to keep: confident visible frames newest first, then the best-ranked remainder."""
    if slots < 0:
        raise ValueError("slots must be >= 0")
    return select_frames(candidates, cfg, slots).chosen


def spatial_select(p: ProbMap, tau_pix: float) -> tuple[ProbMap, Mask]:
    filtered = np.where(p.values > tau_pix, p.values, 0.0)
    return ProbMap(filtered), Mask(filtered > 0.0)


def _entry(rec: FrameRecord, tau_pix: float) -> MemoryEntry:
    filtered, mask = spatial_select(rec.prob, tau_pix)
    return MemoryEntry(rec.frame_index, filtered, mask, rec.appearance, rec.scores)


def update_memory(
    bank: MemoryBank,
    history: Sequence[FrameRecord],
    cfg: SelectionConfig,
    mode: str = "stms",
    current_frame: int | None = None,
    spatial: bool | None = None,
    log: list | None = None,
) -> MemoryBank:
    """Rebuild the bank for segmenting ``current_frame`` (default: one past the newest record).

    ``mode="stms"`` picks frames with :func:`select_frames`; ``mode="fifo"``
    keeps the most recent ones. ``spatial`` enables pixel filtering at
    ``cfg.tau_pix`` and defaults to on for ``stms``, off for ``fifo``;
    without it only zero-probability pixels are dropped. When ``log`` is a
    list, one decision record per call is appended to it.
    """
    first = bank.first
    if current_frame is None:
        current_frame = (max((r.frame_index for r in history), default=first.frame_index)) + 1
    if spatial is None:
        spatial = mode == "stms"
    tau = cfg.tau_pix if spatial else 0.0
    slots = bank.capacity - 1
    past = [r for r in history if r.frame_index != first.frame_index and r.frame_index < current_frame]
    by_index = {r.frame_index: r for r in past}

    if mode == "stms":
        cands = sample_candidates(past, cfg, current_frame, first.frame_index)
        sel = select_frames(((r.frame_index, r.scores) for r in cands), cfg, slots)
        chosen = sel.chosen
    elif mode == "fifo":
        recent = sorted(by_index, reverse=True)[:slots]
        sel = Selection(tier1=recent)
        chosen = recent
    else:
        raise ValueError(f"unknown memory mode {mode!r}")

    if log is not None:
        log.append({
            "frame": current_frame,
            "mode": mode,
            "tier1": list(sel.tier1),
            "tier2": list(sel.tier2),
            "rejected": [{"frame": t, "reason": why} for t, why in sel.rejected],
        })
    entries = [first] + [_entry(by_index[t], tau) for t in chosen]
    return MemoryBank(bank.capacity, entries)


def write_selection_log(records: Iterable[dict], path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
