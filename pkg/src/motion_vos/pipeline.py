"""End-to-end tracking loop with independent motion-prompt and memory-selection toggles."""

from __future__ import annotations

import csv
import json
import logging
from functools import partial
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .flow import FlowField, Frame, estimate_flow, flow_box_prompt, masked_flow, motion_flow, save_flow, warp_mask_forward
from .masks import (
    EmptyMaskError,
    Mask,
    boundary_array,
    frame_filename,
    load_gray,
    load_mask,
    save_mask,
    save_prob,
)
from .memory import (
    FrameRecord,
    MemoryBank,
    SelectionConfig,
    initial_bank,
    update_memory,
    write_selection_log,
)
from .metrics import MetricsReport, evaluate_sequence
from .segmenters import PromptSet, SegmenterOutput, make_segmenter
from .simulator import GroundTruthRecord, generate_scenario, load_manifest, scenario_suite
from .sparse import (
    KeyPointSet,
    MotionHistory,
    extract_keypoints,
    extrapolate_keypoints,
    keypoints_to_point_prompts,
    write_keypoint_trace,
)

log = logging.getLogger(__name__)

TOGGLES = ("mgp_sparse", "mgp_dense", "stms_temporal", "stms_spatial")


class PipelineError(RuntimeError):
    pass


@dataclass
class RunConfig:
    segmenter: str = "oracle"
    mgp_sparse: bool = True
    mgp_dense: bool = True
    stms_temporal: bool = True
    stms_spatial: bool = True
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    keypoint_count: int = 5
    flow_interval: int = 1
    seed: int = 0
    scenario: str | None = None
    manifest: str | None = None
    frames_dir: str | None = None
    masks_dir: str | None = None
    init_mask: str | None = None
    output: str | None = None
    dump_flow: bool = False

    def __post_init__(self):
        if isinstance(self.selection, dict):
            self.selection = SelectionConfig(**self.selection)
        if self.flow_interval < 1:
            raise ValueError("flow_interval must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_toggles(self, sm=False, dm=False, ts=False, ss=False) -> "RunConfig":
        return replace(self, mgp_sparse=sm, mgp_dense=dm, stms_temporal=ts, stms_spatial=ss)


@dataclass
class PipelineState:
    frame_index: int
    motion_history: MotionHistory
    bank: MemoryBank
    last_output: SegmenterOutput
    last_flow: FlowField | None = None


@dataclass
class RunResult:
    outputs: list[SegmenterOutput]
    report: MetricsReport | None
    selection_log: list[dict]
    keypoints: list[KeyPointSet]
    prompts: list[PromptSet]
    bank_trace: list[list[dict]]
    flows: dict[int, FlowField] = field(default_factory=dict)


# -- inputs ------------------------------------------------------------------

def _load_dir_sequence(frames_dir, masks_dir=None, init_mask=None):
    frame_paths = sorted(Path(frames_dir).glob("*.pgm")) + sorted(Path(frames_dir).glob("*.png"))
    if not frame_paths:
        raise PipelineError(f"no frames found in {frames_dir}")
    frames = [Frame(load_gray(p), index=i) for i, p in enumerate(frame_paths)]
    gts = None
    if masks_dir is not None:
        mask_paths = sorted(Path(masks_dir).glob("*.pgm")) + sorted(Path(masks_dir).glob("*.png"))
        if len(mask_paths) != len(frame_paths):
            raise PipelineError(f"{len(frame_paths)} frames but {len(mask_paths)} masks")
        gts = []
        for i, p in enumerate(mask_paths):
            m = load_mask(p)
            gts.append(GroundTruthRecord(i, m, m.is_empty()))
        first = gts[0].mask
    elif init_mask is not None:
        first = load_mask(init_mask)
    else:
        raise PipelineError("directory input needs masks_dir or init_mask for the first frame")
    return frames, gts, first


def load_input(cfg: RunConfig):
    """Return ``(frames, gt_records_or_None, first_frame_mask)``."""
    if cfg.scenario is not None:
        suite = scenario_suite()
        if cfg.scenario not in suite:
            raise PipelineError(f"unknown scenario {cfg.scenario!r}; known: {', '.join(suite)}")
        seq = generate_scenario(suite[cfg.scenario])
    elif cfg.manifest is not None:
        seq = generate_scenario(load_manifest(cfg.manifest))
    elif cfg.frames_dir is not None:
        return _load_dir_sequence(cfg.frames_dir, cfg.masks_dir, cfg.init_mask)
    else:
        raise PipelineError("no input: set scenario, manifest or frames_dir")
    frames = [f for f, _ in seq]
    gts = [g for _, g in seq]
    return frames, gts, gts[0].mask


# -- the loop ------------------------------------------------------------------

def build_prompts(state: PipelineState, frames: list[Frame], t: int, cfg: RunConfig, backend=None) -> PromptSet:
    h, w = frames[t].shape
    points: tuple = ()
    box = None
    hist = state.motion_history
    if cfg.mgp_sparse and len(hist) >= 2:
        kp = extrapolate_keypoints(hist, t - hist.last.frame_index)
        points = tuple(keypoints_to_point_prompts(kp, (w, h)))
    dt = cfg.flow_interval
    last = state.last_output.mask
    state.last_flow = None
    if cfg.mgp_dense and t - 1 - dt >= 0 and not last.is_empty():
        flow = motion_flow(frames[t - 1 - dt], frames[t - 1], dt, partial(estimate_flow, backend=backend))
        state.last_flow = flow
        g, _ = masked_flow(flow, last)
        try:
            box = flow_box_prompt(warp_mask_forward(last, g, 1), (w, h))
        except EmptyMaskError:
            box = None
    return PromptSet(points, box)


def run_pipeline(cfg: RunConfig, frames=None, gts=None, first_mask=None, backend=None) -> RunResult:
    """Track the object through the sequence and, when ground truth exists, score it.

    Frame 0 is segmented from its mask prompt and seeds the memory bank and
    the motion history. Each later frame gets point prompts from extrapolated
    keypoints and a box prompt from the flow-warped previous mask (per
    toggle), is segmented against the bank, and then the bank is rebuilt.
    Only frames after the first are scored.
    """
    if frames is None:
        frames, gts, first_mask = load_input(cfg)
    if first_mask is None:
        first_mask = gts[0].mask
    if first_mask.is_empty():
        raise PipelineError("first-frame mask is empty")
    h, w = frames[0].shape

    seg = make_segmenter(cfg.segmenter, gt=gts, seed=cfg.seed, backend=backend)
    seg.reset()
    sel_cfg = cfg.selection
    mode = "stms" if cfg.stms_temporal else "fifo"

    bank = initial_bank(frames[0], first_mask, sel_cfg.capacity)
    out0 = seg.segment(frames[0], PromptSet(first_frame_mask=first_mask), bank)
    motion = MotionHistory(2)
    kp0 = extract_keypoints(first_mask, cfg.keypoint_count, 0)
    motion.append(kp0)
    state = PipelineState(0, motion, bank, out0)

    outputs = [out0]
    prompts_log = [PromptSet(first_frame_mask=first_mask)]
    keypoints = [kp0]
    history: list[FrameRecord] = []
    selection_log: list[dict] = []
    bank_trace = [_bank_summary(bank)]
    flows: dict[int, FlowField] = {}
    keep = max(sel_cfg.effective_window, sel_cfg.capacity) + 1

    for t in range(1, len(frames)):
        prompts = build_prompts(state, frames, t, cfg, backend)
        out = seg.segment(frames[t], prompts, state.bank)
        outputs.append(out)
        prompts_log.append(prompts)
        if cfg.dump_flow and state.last_flow is not None:
            flows[t] = state.last_flow
        if not out.mask.is_empty():
            kp = extract_keypoints(out.mask, cfg.keypoint_count, t)
            state.motion_history.append(kp)
            keypoints.append(kp)
        history.append(FrameRecord(t, out.prob, out.scores, frames[t]))
        history = history[-keep:]
        state.bank = update_memory(
            state.bank, history, sel_cfg, mode, current_frame=t + 1, spatial=cfg.stms_spatial, log=selection_log
        )
        state.bank.check()
        bank_trace.append(_bank_summary(state.bank))
        state.last_output = out
        state.frame_index = t

    report = None
    if gts is not None:
        report = evaluate_sequence(
            [o.mask for o in outputs[1:]],
            [g.mask for g in gts[1:]],
            [g.occluded for g in gts[1:]],
            first_index=1,
        )
    result = RunResult(outputs, report, selection_log, keypoints, prompts_log, bank_trace, flows)
    if cfg.output:
        save_run(result, cfg, cfg.output)
    return result


def _bank_summary(bank: MemoryBank) -> list[dict]:
    return [
        {
            "frame": e.frame_index,
            "first": e.is_first_frame,
            "s_iou": e.scores.s_iou,
            "s_occ": e.scores.s_occ,
        }
        for e in bank.entries
    ]


def save_run(result: RunResult, cfg: RunConfig, out_dir) -> None:
    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    (out / "probs").mkdir(parents=True, exist_ok=True)
    for i, o in enumerate(result.outputs):
        save_mask(o.mask, out / "masks" / frame_filename(i))
        save_prob(o.prob, out / "probs" / frame_filename(i))
    with open(out / "scores.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["frame_index", "s_iou", "s_occ", "area"])
        for i, o in enumerate(result.outputs):
            wr.writerow([i, f"{o.scores.s_iou:.6f}", f"{o.scores.s_occ:.6f}", o.mask.area])
    write_selection_log(result.selection_log, out / "selection.jsonl")
    write_keypoint_trace(result.keypoints, out / "keypoints.csv")
    if result.report is not None:
        result.report.write_csv(out / "metrics.csv")
        result.report.write_json(out / "metrics.json")
    if result.flows:
        (out / "flows").mkdir(exist_ok=True)
        for t, flow in result.flows.items():
            # flow used to build the prompt for frame t
            save_flow(flow, out / "flows", f"{t:05d}")
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


# -- sweeps ------------------------------------------------------------------

SWEEPABLE = ("keypoints", "flow_interval", "tau_iou", "tau_occ", "tau_rank")


def _apply_param(cfg: RunConfig, param: str, value) -> RunConfig:
    if param == "keypoints":
        return replace(cfg, keypoint_count=int(value))
    if param == "flow_interval":
        return replace(cfg, flow_interval=int(value))
    if param in ("tau_iou", "tau_occ", "tau_rank"):
        return replace(cfg, selection=replace(cfg.selection, **{param: float(value)}))
    raise ValueError(f"unknown sweep parameter {param!r}; expected one of {', '.join(SWEEPABLE)}")


def sweep(cfg: RunConfig, param: str, values, scenarios=None, out_csv=None) -> list[tuple[float, float]]:
    """Mean J&F over the scenario suite for each parameter value."""
    if param not in SWEEPABLE:
        raise ValueError(f"unknown sweep parameter {param!r}; expected one of {', '.join(SWEEPABLE)}")
    names = list(scenarios) if scenarios is not None else list(scenario_suite())
    rows = []
    for value in values:
        run_cfg = _apply_param(replace(cfg, output=None, manifest=None, frames_dir=None), param, value)
        scores = []
        for name in names:
            res = run_pipeline(replace(run_cfg, scenario=name))
            scores.append(res.report.j_and_f)
        rows.append((value, float(np.mean(scores))))
        log.info("%s=%s j_and_f=%.4f", param, value, rows[-1][1])
    if out_csv is not None:
        with open(out_csv, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow([param, "j_and_f"])
            for value, score in rows:
                wr.writerow([value, f"{score:.6f}"])
    return rows


# -- overlays ------------------------------------------------------------------

PRED_COLOR = (255, 0, 0)
GT_COLOR = (0, 255, 0)
BOTH_COLOR = (255, 255, 0)


def overlay(frame: np.ndarray, pred: Mask | None, gt: Mask | None = None) -> np.ndarray:
    """RGB image of ``frame`` with boundaries burned in: prediction red, GT green, shared yellow."""
    gray = np.rint(np.clip(frame, 0.0, 1.0) * 255).astype(np.uint8)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    bp = boundary_array(pred.cells) if pred is not None else np.zeros(gray.shape, bool)
    bg = boundary_array(gt.cells) if gt is not None else np.zeros(gray.shape, bool)
    rgb[bp & ~bg] = PRED_COLOR
    rgb[bg & ~bp] = GT_COLOR
    rgb[bp & bg] = BOTH_COLOR
    return rgb


def render_overlays(run_dir, frames_dir, out_dir, gt_dir=None) -> list[Path]:
    pred_paths = sorted((Path(run_dir) / "masks").glob("*.pgm"))
    frame_paths = sorted(Path(frames_dir).glob("*.pgm")) + sorted(Path(frames_dir).glob("*.png"))
    if len(pred_paths) != len(frame_paths):
        raise PipelineError(f"{len(frame_paths)} frames but {len(pred_paths)} predicted masks")
    gt_paths = None
    if gt_dir is not None:
        gt_paths = sorted(Path(gt_dir).glob("*.pgm")) + sorted(Path(gt_dir).glob("*.png"))
        if len(gt_paths) != len(frame_paths):
            raise PipelineError(f"{len(frame_paths)} frames but {len(gt_paths)} ground-truth masks")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, (fp, pp) in enumerate(zip(frame_paths, pred_paths)):
        gt = load_mask(gt_paths[i]) if gt_paths else None
        img = overlay(load_gray(fp), load_mask(pp), gt)
        path = out / frame_filename(i, ".png")
        Image.fromarray(img).save(path)
        written.append(path)
    return written
