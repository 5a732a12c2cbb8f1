"""Command-line pipeline driver.

Subcommands: segment (event split), select (significant events), plan (full
pipeline producing a SelectionPlan). Exit codes: 0 success, 2 input
validation, 3 provider failure, 4 token budget violation. FLOWGATE_LOG sets
the log level; FLOWGATE_KERNELS picks the numeric backend.
"""

import argparse
import csv
import json
import logging
import os
import shlex
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from . import kernels
from .des import (ADAPTIVE, DesConfig, coarse_boundaries,
                  frame_difference_series, refine_boundaries, resolve_theta,
                  split_events)
from .ecq import (SignificanceTable, event_significance, load_embeddings,
                  select_events_minimal)
from .errors import (FlowgateError, ProviderFailure, TokenBudgetExceeded,
                     TooFewFrames)
from .homography import RansacConfig
from .mtp import MtpConfig, TokenMask, mtp_frame, render_overlay
from .planner import (BudgetConfig, build_plan, config_hash, plan_to_json)
from .providers import (BuiltinFlowProvider, ConstantSaliencyProvider,
                        DirectoryFlowProvider, DirectorySaliencyProvider,
                        load_frames, prefetch, saliency_file_name,
                        validate_providers)

logger = logging.getLogger("flowgate")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROVIDER = 3
EXIT_BUDGET = 4

BUILTIN_BLOCK = 8
BUILTIN_RADIUS = 4


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must look like 13x13, got {text!r}") from exc


def _parse_theta(text: str):
    if text == ADAPTIVE:
        return ADAPTIVE
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--frames", help="directory of zero-padded frame images")
    common.add_argument("--video", help="raw video file, decoded via --decode-hook")
    common.add_argument("--decode-hook",
                        help="command template decoding {video} into {outdir} as images")
    common.add_argument("--flow", default="builtin",
                        help="flow provider: 'builtin' or a directory of flow_{t:06}.flo")
    common.add_argument("--saliency", help="directory of sal_{t:06}.png maps")
    common.add_argument("--embeddings", help="EMB1 (or JSON) anchor embeddings file")
    common.add_argument("--query", help="EMB1 (or JSON) single-record query embedding")
    common.add_argument("--no-normalize-embeddings", action="store_true",
                        help="compare raw dot products instead of cosines")
    common.add_argument("--theta", type=_parse_theta, default=ADAPTIVE,
                        help="difference threshold or 'adaptive' (default)")
    common.add_argument("--eta", type=float, default=1.0,
                        help="flow magnitude threshold, px (default 1.0)")
    common.add_argument("--window", type=int, default=3,
                        help="flows inspected per candidate, odd (default 3)")
    common.add_argument("--min-event-len", type=int, default=2,
                        help="minimum frames between boundaries (default 2)")
    common.add_argument("--keep-percent", type=float, default=50.0,
                        help="share of positive-support patches kept (default 50)")
    common.add_argument("--p-target", type=float, default=0.05,
                        help="unselected significance mass bound (default 0.05)")
    common.add_argument("--base-frames", type=int, default=64,
                        help="initial sampling frame count (default 64)")
    common.add_argument("--tokens-per-frame", type=int, default=169,
                        help="encoder tokens per frame (default 169)")
    common.add_argument("--grid", type=_parse_grid, default=(13, 13),
                        help="patch grid as WxH (default 13x13)")
    common.add_argument("--seed", type=int, default=0, help="RANSAC seed (default 0)")
    common.add_argument("--workers", type=int, default=1,
                        help="worker threads for flow/mask stages (default 1)")
    common.add_argument("--overlays", action="store_true",
                        help="write per-frame mask overlay PNGs")
    common.add_argument("--validate-providers", action="store_true",
                        help="check provider file formats and exit")
    common.add_argument("--out", default=".", help="output directory (default .)")

    parser = argparse.ArgumentParser(
        prog="flowgate",
        description="Motion-prior key-content selection for video frames.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("segment", parents=[common],
                   help="split frames into temporal events")
    sel = sub.add_parser("select", parents=[common],
                         help="select significant events for a query")
    sel.add_argument("--events", help="events.json produced by 'segment'")
    sub.add_parser("plan", parents=[common],
                   help="run the full pipeline and emit plan.json")
    return parser


def _des_config(args) -> DesConfig:
    return DesConfig(theta=args.theta, eta=args.eta, window=args.window,
                     min_event_len=args.min_event_len)


def _mtp_config(args) -> MtpConfig:
    return MtpConfig(keep_percent=args.keep_percent, patch_grid=args.grid,
                     ransac=RansacConfig(seed=args.seed))


def _budget_config(args) -> BudgetConfig:
    return BudgetConfig(base_frames=args.base_frames,
                        tokens_per_frame=args.tokens_per_frame,
                        keep_percent=args.keep_percent, p_target=args.p_target)


def _full_config_dict(args) -> dict:
    grid_w, grid_h = args.grid
    return {
        "theta": args.theta, "eta": args.eta, "window": args.window,
        "min_event_len": args.min_event_len, "keep_percent": args.keep_percent,
        "p_target": args.p_target, "base_frames": args.base_frames,
        "tokens_per_frame": args.tokens_per_frame,
        "grid": [grid_w, grid_h], "seed": args.seed,
        "normalize_embeddings": not args.no_normalize_embeddings,
        "builtin_flow": {"block": BUILTIN_BLOCK, "radius": BUILTIN_RADIUS},
    }


def _resolve_frames_dir(args) -> str:
    if args.frames:
        return args.frames
    if args.video and args.decode_hook:
        outdir = tempfile.mkdtemp(prefix="flowgate_frames_")
        cmd = [part.format(video=args.video, outdir=outdir)
               for part in shlex.split(args.decode_hook)]
        logger.info("decoding %s via %s", args.video, cmd)
        proc = subprocess.run(cmd)
        if proc.returncode != 0:
            raise ProviderFailure(f"decode hook failed with code {proc.returncode}")
        return outdir
    raise FlowgateError("need --frames DIR (or --video with --decode-hook)")


def _flow_provider(args, frames):
    if args.flow == "builtin":
        return BuiltinFlowProvider(frames, BUILTIN_BLOCK, BUILTIN_RADIUS)
    return DirectoryFlowProvider(args.flow, expected_shape=frames[0].shape[:2])


def _saliency_provider(args, frames):
    if args.saliency:
        return DirectorySaliencyProvider(args.saliency,
                                         expected_shape=frames[0].shape[:2])
    return ConstantSaliencyProvider(frames[0].shape[:2])


def _run_validation(args) -> int:
    frames_dir = _resolve_frames_dir(args)
    diags = validate_providers(
        frames_dir,
        flow_dir=None if args.flow == "builtin" else args.flow,
        saliency_dir=args.saliency,
        embeddings_file=args.embeddings,
        query_file=args.query)
    for d in diags:
        print(f"ERROR {d}")
    print(f"{len(diags)} diagnostics")
    return EXIT_OK if not diags else EXIT_INPUT


def _segment(args, frames, flow_provider):
    config = _des_config(args)
    series = frame_difference_series(frames)
    candidates = coarse_boundaries(series, config)
    prefetch(flow_provider,
             sorted({s for t in candidates
                     for s in range(max(0, t - config.window // 2),
                                    min(len(frames) - 2, t + config.window // 2) + 1)}),
             args.workers)
    boundaries = refine_boundaries(len(frames), candidates, flow_provider, config)
    events = split_events(len(frames), boundaries)
    return series, candidates, boundaries, events


def cmd_segment(args) -> int:
    frames_dir = _resolve_frames_dir(args)
    frames = load_frames(frames_dir)
    if len(frames) < 2:
        raise TooFewFrames(f"need >= 2 frames, found {len(frames)} in {frames_dir}")
    flow_provider = _flow_provider(args, frames)
    series, candidates, boundaries, events = _segment(args, frames, flow_provider)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "video": Path(frames_dir).name,
        "frame_count": len(frames),
        "theta": resolve_theta(series, _des_config(args)),
        "coarse_candidates": candidates,
        "boundaries": boundaries,
        "events": [{"start": e.start, "end": e.end, "anchor": e.anchor}
                   for e in events],
        "provenance": {"config_hash": config_hash(_full_config_dict(args)),
                       "seed": args.seed},
    }
    (out / "events.json").write_text(json.dumps(doc, indent=2) + "\n")
    with (out / "dv_series.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "value"])
        for i, v in enumerate(series):
            writer.writerow([i, repr(float(v))])
    print(f"{len(events)} events, boundaries at {boundaries}")
    return EXIT_OK


def cmd_select(args) -> int:
    if not getattr(args, "events", None):
        raise FlowgateError("select needs --events events.json")
    events_doc = json.loads(Path(args.events).read_text())
    n_events = len(events_doc["events"])
    if not args.embeddings or not args.query:
        raise FlowgateError("select needs --embeddings and --query files")
    anchors = load_embeddings(args.embeddings)
    query = load_embeddings(args.query)
    if anchors.shape[0] != n_events:
        raise FlowgateError(
            f"embedding count {anchors.shape[0]} != event count {n_events}")
    if query.shape[0] != 1:
        raise FlowgateError(f"query must hold 1 record, found {query.shape[0]}")
    table = event_significance(anchors, query[0],
                               normalize=not args.no_normalize_embeddings)
    result = select_events_minimal(table, args.p_target)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "similarities": [float(s) for s in table.similarities],
        "alphas": [float(a) for a in table.alphas],
        "selected": list(result.selected),
        "achieved_mass": result.achieved_mass,
        "p_value": result.p_value,
        "provenance": {"config_hash": config_hash(_full_config_dict(args)),
                       "seed": args.seed},
    }
    (out / "selection.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"selected {len(result.selected)}/{n_events} events, "
          f"p_value={result.p_value:.4f}")
    return EXIT_OK


def cmd_plan(args) -> int:
    grid_w, grid_h = args.grid
    if grid_w * grid_h != args.tokens_per_frame:
        raise FlowgateError(
            f"--grid {grid_w}x{grid_h} yields {grid_w * grid_h} tokens but "
            f"--tokens-per-frame is {args.tokens_per_frame}")
    frames_dir = _resolve_frames_dir(args)
    frames = load_frames(frames_dir)
    if len(frames) < 2:
        raise TooFewFrames(f"need >= 2 frames, found {len(frames)} in {frames_dir}")

    flow_provider = _flow_provider(args, frames)
    saliency_provider = _saliency_provider(args, frames)
    _, _, _, events = _segment(args, frames, flow_provider)
    logger.info("%d events from %d frames", len(events), len(frames))

    if args.embeddings and args.query:
        anchors = load_embeddings(args.embeddings)
        query = load_embeddings(args.query)
        if anchors.shape[0] != len(events):
            raise FlowgateError(
                f"embedding count {anchors.shape[0]} != event count {len(events)}")
        table = event_significance(anchors, query[0],
                                   normalize=not args.no_normalize_embeddings)
    else:
        # no query: every event equally significant
        table = SignificanceTable.uniform(len(events))
    selection = select_events_minimal(table, args.p_target)
    selected = set(selection.selected)

    mtp_config = _mtp_config(args)
    budget_config = _budget_config(args)
    n = len(frames)
    mask_cache: dict[int, TokenMask] = {}

    def mask_provider(t: int) -> TokenMask:
        if t not in mask_cache:
            if t >= n - 1:  # last frame has no forward flow: fail open
                mask_cache[t] = TokenMask.all_kept(grid_w, grid_h)
            else:
                mask_cache[t] = mtp_frame(t, flow_provider, saliency_provider,
                                          mtp_config)
        return mask_cache[t]

    if args.workers > 1 and args.keep_percent < 100.0:
        from .planner import plan_layout
        _, _, _, samples = plan_layout(events, selected, budget_config)
        needed = sorted({idx for i, e in enumerate(events)
                         for idx in samples[i] if idx != e.anchor})
        prefetch(mask_provider, needed, args.workers)

    cfg = _full_config_dict(args)
    provenance = {
        "config_hash": config_hash(cfg),
        "seed": args.seed,
        "kernel_backend": kernels.backend_name(),
        "providers": {
            "flow": flow_provider.identifier,
            "saliency": saliency_provider.identifier,
            "embeddings": args.embeddings or None,
            "query": args.query or None,
        },
    }
    plan = build_plan(events, selected, mask_provider, budget_config,
                      video=Path(frames_dir).name, provenance=provenance)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plan.json").write_text(plan_to_json(plan))

    if args.overlays:
        overlay_dir = out / "overlays"
        overlay_dir.mkdir(exist_ok=True)
        for event in plan.events:
            for pf in event.frames:
                if pf.mask is None:
                    continue
                img = render_overlay(frames[pf.index], pf.mask)
                Image.fromarray(img).save(overlay_dir / saliency_file_name(pf.index)
                                          .replace("sal_", "overlay_"))
    print(f"plan: {plan.total_frames} frames, {plan.total_tokens} tokens "
          f"(budget {budget_config.token_budget})")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("FLOWGATE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.validate_providers:
            return _run_validation(args)
        if args.command == "segment":
            return cmd_segment(args)
        if args.command == "select":
            return cmd_select(args)
        return cmd_plan(args)
    except TokenBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ProviderFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (FlowgateError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
