"""Command-line entry point: ``motion-vos {simulate,run,eval,sweep,render}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .masks import load_mask
from .metrics import evaluate_sequence
from .pipeline import SWEEPABLE, RunConfig, render_overlays, run_pipeline, sweep
from .simulator import load_manifest, scenario_suite, write_scenario


def _mask_dir(path):
    paths = sorted(Path(path).glob("*.pgm")) + sorted(Path(path).glob("*.png"))
    if not paths:
        raise FileNotFoundError(f"no masks in {path}")
    return [load_mask(p) for p in paths]


def cmd_simulate(args) -> int:
    suite = scenario_suite()
    if args.scenario in suite:
        scenario = suite[args.scenario]
    elif Path(args.scenario).is_file():
        scenario = load_manifest(args.scenario)
    else:
        raise ValueError(f"unknown scenario {args.scenario!r}; known: {', '.join(suite)}")
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    path = write_scenario(scenario, args.out)
    print(f"wrote {scenario.num_frames} frames to {args.out} ({path.name})")
    return 0


def _run_config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    overrides = {}
    for name in ("mgp_sparse", "mgp_dense", "stms_temporal", "stms_spatial"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    for name in ("segmenter", "scenario", "manifest", "frames_dir", "masks_dir", "init_mask", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "dump_flow", False):
        overrides["dump_flow"] = True
    if getattr(args, "out", None):
        overrides["output"] = args.out
    return replace(cfg, **overrides)


def cmd_run(args) -> int:
    cfg = _run_config(args)
    if cfg.output is None:
        raise ValueError("run needs an output directory (--out or 'output' in the config)")
    result = run_pipeline(cfg)
    if result.report is not None:
        s = result.report.summary()
        print(f"J={s['mean_j']:.4f} F={s['mean_f']:.4f} J&F={s['j_and_f']:.4f} -> {cfg.output}")
    else:
        print(f"{len(result.outputs)} masks -> {cfg.output}")
    return 0


def cmd_eval(args) -> int:
    preds = _mask_dir(args.pred)
    gts = _mask_dir(args.gt)
    if args.skip_first:
        preds, gts = preds[1:], gts[1:]
    report = evaluate_sequence(preds, gts, exclude_occluded=args.exclude_occluded,
                               first_index=1 if args.skip_first else 0)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.write_csv(out)
    report.write_json(out.with_suffix(".json"))
    print(json.dumps(report.summary(), sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    cfg = _run_config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ValueError("--values is empty")
    scenarios = args.scenarios.split(",") if args.scenarios else None
    rows = sweep(cfg, args.param, values, scenarios=scenarios, out_csv=args.out)
    for value, score in rows:
        print(f"{args.param}={value} j_and_f={score:.4f}")
    return 0


def cmd_render(args) -> int:
    written = render_overlays(args.run, args.frames, args.out, gt_dir=args.gt)
    print(f"wrote {len(written)} overlays to {args.out}")
    return 0


def _add_run_options(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--segmenter", choices=("oracle", "matcher"))
    p.add_argument("--scenario", help="named scenario from the built-in suite")
    p.add_argument("--manifest", help="scenario manifest.json")
    p.add_argument("--frames-dir", dest="frames_dir")
    p.add_argument("--masks-dir", dest="masks_dir")
    p.add_argument("--init-mask", dest="init_mask")
    p.add_argument("--seed", type=int)
    for flag, name in (("sparse", "mgp_sparse"), ("dense", "mgp_dense"),
                       ("temporal", "stms_temporal"), ("spatial", "stms_spatial")):
        p.add_argument(f"--{flag}", dest=name, action=argparse.BooleanOptionalAction, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motion-vos", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic scenario to disk")
    p.add_argument("--scenario", required=True, help="suite name or manifest path")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="track an object through a sequence")
    _add_run_options(p)
    p.add_argument("--out")
    p.add_argument("--dump-flow", action="store_true", help="write the dense flow behind each box prompt")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True, help="per-frame CSV; a JSON summary is written next to it")
    p.add_argument("--exclude-occluded", action="store_true")
    p.add_argument("--skip-first", action="store_true", help="do not score the prompted first frame")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="mean J&F over the scenario suite per parameter value")
    _add_run_options(p)
    p.add_argument("--param", required=True, choices=SWEEPABLE)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--scenarios", help="comma-separated scenario names (default: whole suite)")
    p.add_argument("--out", help="CSV table")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="draw mask boundaries over frames")
    p.add_argument("--run", required=True, help="directory written by 'run'")
    p.add_argument("--frames", required=True)
    p.add_argument("--gt", help="ground-truth mask directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"motion-vos {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
