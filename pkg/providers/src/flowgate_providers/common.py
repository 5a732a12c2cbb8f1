"""Shared exporter plumbing: frame loading, manifests, structured errors."""

import hashlib
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

FRAME_EXTENSIONS = (".png", ".bmp", ".jpg", ".jpeg", ".tiff", ".tif")

LUMA = (0.299, 0.587, 0.114)


def list_frames(frames_dir: str | Path) -> list[Path]:
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise FileNotFoundError(f"frames directory {frames_dir} does not exist")
    files = sorted(p for p in frames_dir.iterdir()
                   if p.suffix.lower() in FRAME_EXTENSIONS)
    if not files:
        raise FileNotFoundError(f"no frames found in {frames_dir}")
    return files


def load_rgb(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def to_gray(frame: np.ndarray) -> np.ndarray:
    f = frame.astype(np.float64)
    return LUMA[0] * f[..., 0] + LUMA[1] * f[..., 1] + LUMA[2] * f[..., 2]


def checkpoint_hash(path: str | Path | None) -> str | None:
    if path is None:
        return None
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: Path, video: str, frame_count: int, kind: str,
                   model: str, ckpt_hash: str | None, iterations: int | None,
                   files: list[str], seed: int | None = None) -> None:
    doc = {
        "video": video,
        "frame_count": frame_count,
        "provider": {
            "kind": kind,
            "model": model,
            "checkpoint_sha256": ckpt_hash,
            "iterations": iterations,
            "seed": seed,
        },
        "files": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")


def fail(kind: str, exc: BaseException) -> int:
    """Emit the structured error JSON contract and return a nonzero code."""
    doc = {"error": {"provider": kind, "type": type(exc).__name__,
                     "message": str(exc)}}
    print(json.dumps(doc), file=sys.stderr)
    return 1
