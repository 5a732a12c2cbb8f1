"""Interchange file formats the exporters emit.

These mirror the consumer-side contracts (Middlebury .flo, EMB1) without
importing the consumer: the files are the interface.
"""

import struct
from pathlib import Path

import numpy as np

FLO_MAGIC = 202021.25
EMB_MAGIC = b"EMB1"


def write_flo(path: str | Path, flow: np.ndarray) -> None:
    """Write an (H, W, 2) field as little-endian Middlebury .flo."""
    flow = np.asarray(flow, dtype=np.float32)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError(f"flow must be (H, W, 2), got {flow.shape}")
    if not np.isfinite(flow).all():
        raise ValueError("flow contains NaN or Inf")
    height, width = flow.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<fii", FLO_MAGIC, width, height))
        fh.write(np.ascontiguousarray(flow, dtype="<f4").tobytes())


def read_flo(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, width, height = struct.unpack_from("<fii", data)
    if magic != np.float32(FLO_MAGIC):
        raise ValueError(f"{path}: bad flow sentinel {magic}")
    vectors = np.frombuffer(data, dtype="<f4", count=width * height * 2, offset=12)
    return vectors.reshape(height, width, 2).copy()


def write_emb(path: str | Path, vectors: np.ndarray) -> None:
    """Write (N, D) float32 vectors as an EMB1 record file."""
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim == 1:
        vectors = vectors[None, :]
    count, dim = vectors.shape
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC + struct.pack("<II", count, dim))
        fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes())


def read_emb(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != EMB_MAGIC:
        raise ValueError(f"{path}: bad embedding magic {data[:4]!r}")
    count, dim = struct.unpack_from("<II", data, 4)
    vectors = np.frombuffer(data, dtype="<f4", count=count * dim, offset=12)
    return vectors.reshape(count, dim).copy()
