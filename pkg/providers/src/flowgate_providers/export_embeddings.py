"""export-embeddings: anchor-image and query-text EMB1 files plus manifest."""

import argparse
from pathlib import Path

import numpy as np

from .common import fail, load_rgb, write_manifest
from .embed import make_backend
from .formats import write_emb


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-embeddings",
        description="Embed anchor frames (ordered by event index) and the "
                    "query text into EMB1 files with unit-norm vectors.")
    parser.add_argument("--anchors", nargs="+", required=True,
                        help="anchor frame image files, in event order")
    parser.add_argument("--query", required=True, help="query text")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--backend", choices=("hash", "siglip"), default="hash")
    parser.add_argument("--model", help="model id or path (siglip backend)")
    parser.add_argument("--dim", type=int, default=64,
                        help="embedding width (hash backend, default 64)")
    parser.add_argument("--seed", type=int, default=0)
    return parser


def run(args) -> int:
    backend = make_backend(args.backend, args.dim, args.seed, args.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    vectors = np.stack([backend.embed_image(load_rgb(p)) for p in args.anchors])
    write_emb(out / "anchors.emb", vectors)
    write_emb(out / "query.emb", backend.embed_text(args.query))

    write_manifest(out, video="anchors", frame_count=len(args.anchors),
                   kind="embeddings", model=backend.name,
                   ckpt_hash=None, iterations=None,
                   files=["anchors.emb", "query.emb"], seed=args.seed)
    print(f"wrote {len(args.anchors)} anchor embeddings and the query to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except Exception as exc:
        return fail("embeddings", exc)


if __name__ == "__main__":
    raise SystemExit(main())
