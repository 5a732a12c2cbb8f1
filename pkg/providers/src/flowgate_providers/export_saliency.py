"""export-saliency: per-frame 8-bit saliency PNGs plus a manifest."""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image

from .common import checkpoint_hash, fail, list_frames, load_rgb, write_manifest
from .saliency import make_backend


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-saliency",
        description="Write one sal_{t:06}.png (8-bit grayscale, frame-sized) "
                    "per input frame.")
    parser.add_argument("--frames", required=True, help="frame image directory")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--backend", choices=("spectral", "u2net"),
                        default="spectral")
    parser.add_argument("--checkpoint", help="TorchScript model (u2net backend)")
    return parser


def run(args) -> int:
    frames = list_frames(args.frames)
    backend = make_backend(args.backend, args.checkpoint)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    files = []
    for t, path in enumerate(frames):
        frame = load_rgb(path)
        sal = backend(frame)
        if sal.shape != frame.shape[:2]:
            raise ValueError(f"saliency {sal.shape} differs from frame "
                             f"{frame.shape[:2]}")
        name = f"sal_{t:06d}.png"
        Image.fromarray(np.rint(np.clip(sal, 0, 1) * 255).astype(np.uint8),
                        mode="L").save(out / name)
        files.append(name)

    write_manifest(out, video=Path(args.frames).name, frame_count=len(frames),
                   kind="saliency", model=backend.name,
                   ckpt_hash=checkpoint_hash(args.checkpoint),
                   iterations=None, files=files)
    print(f"wrote {len(files)} saliency maps to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except Exception as exc:
        return fail("saliency", exc)


if __name__ == "__main__":
    raise SystemExit(main())
