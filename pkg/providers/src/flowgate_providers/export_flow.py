"""export-flow: write per-pair Middlebury flow files plus a manifest."""

import argparse
from pathlib import Path

from .common import (checkpoint_hash, fail, list_frames, load_rgb,
                     write_manifest)
from .flow import make_backend
from .formats import write_flo


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-flow",
        description="Estimate optical flow for consecutive frame pairs and "
                    "write flow_{t:06}.flo files (pixel units).")
    parser.add_argument("--frames", required=True, help="frame image directory")
    parser.add_argument("--iters", type=int, default=12,
                        help="estimator iterations: few for coarse event "
                             "splitting, more for fine token pruning (default 12)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--backend", choices=("tiny", "raft"), default="tiny")
    parser.add_argument("--checkpoint", help="model checkpoint (raft backend)")
    parser.add_argument("--seed", type=int, default=0)
    return parser


def run(args) -> int:
    frames = list_frames(args.frames)
    if len(frames) < 2:
        raise ValueError(f"need >= 2 frames, found {len(frames)}")
    backend = make_backend(args.backend, args.iters, args.checkpoint, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    files = []
    prev = load_rgb(frames[0])
    for t in range(len(frames) - 1):
        cur = load_rgb(frames[t + 1])
        if cur.shape != prev.shape:
            raise ValueError(f"frame {t + 1} shape {cur.shape} differs from "
                             f"frame {t} shape {prev.shape}")
        name = f"flow_{t:06d}.flo"
        write_flo(out / name, backend(prev, cur))
        files.append(name)
        prev = cur

    write_manifest(out, video=Path(args.frames).name, frame_count=len(frames),
                   kind="flow", model=backend.name,
                   ckpt_hash=checkpoint_hash(args.checkpoint),
                   iterations=args.iters, files=files, seed=args.seed)
    print(f"wrote {len(files)} flow files to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except Exception as exc:
        return fail("flow", exc)


if __name__ == "__main__":
    raise SystemExit(main())
