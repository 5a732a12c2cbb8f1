"""Optical-flow data model, Middlebury file I/O, and the builtin estimator.

Rasters are plain numpy arrays: frames are (H, W, 3) uint8, flow fields are
(H, W, 2) float32, scalar fields are (H, W) float64. Validators below enforce
the invariants at the operation boundaries.
"""

import struct

import numpy as np

from . import kernels
from .errors import BadMagic, DimensionMismatch, NonFinite, Truncated

FLO_MAGIC = 202021.25  # float32 sentinel, bytes "PIEH" little-endian

# ITU-R 601 luma weights for the block matcher's grayscale
_LUMA = (0.299, 0.587, 0.114)


def validate_frame(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise DimensionMismatch(f"frame must be (H, W, 3), got {frame.shape}")
    if frame.shape[0] < 1 or frame.shape[1] < 1:
        raise DimensionMismatch("frame must be at least 1x1")
    if frame.dtype != np.uint8:
        raise DimensionMismatch(f"frame must be uint8, got {frame.dtype}")
    return frame


def validate_flow(flow: np.ndarray) -> np.ndarray:
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise DimensionMismatch(f"flow must be (H, W, 2), got {flow.shape}")
    if not np.isfinite(flow).all():
        raise NonFinite("flow contains NaN or Inf components")
    return flow.astype(np.float32, copy=False)


def grayscale(frame: np.ndarray) -> np.ndarray:
    """Integer-valued ITU-R 601 luma.

    Rounded to the nearest integer so the block-matching SSD sums are exact
    and identical across kernel backends.
    """
    frame = validate_frame(frame)
    f = frame.astype(np.float64)
    luma = _LUMA[0] * f[..., 0] + _LUMA[1] * f[..., 1] + _LUMA[2] * f[..., 2]
    return np.rint(luma).astype(np.int64)


def read_flow_file(data: bytes) -> np.ndarray:
    """Parse a Middlebury .flo buffer into an (H, W, 2) float32 field.

    Layout: float32 sentinel 202021.25, int32 width, int32 height, then
    width*height interleaved (u, v) float32 pairs, all little-endian,
    row-major.
    """
    if len(data) < 12:
        raise Truncated(f"flow buffer has {len(data)} bytes, header needs 12")
    magic = np.frombuffer(data, dtype="<f4", count=1)[0]
    if magic != np.float32(FLO_MAGIC):
        raise BadMagic(f"bad flow sentinel {magic!r}")
    width, height = struct.unpack_from("<ii", data, 4)
    if width <= 0 or height <= 0:
        raise BadMagic(f"invalid flow dimensions {width}x{height}")
    need = 12 + width * height * 8
    if len(data) < need:
        raise Truncated(f"flow buffer has {len(data)} bytes, header implies {need}")
    vectors = np.frombuffer(data, dtype="<f4", count=width * height * 2, offset=12)
    flow = vectors.reshape(height, width, 2).copy()
    if not np.isfinite(flow).all():
        raise NonFinite("flow file contains NaN or Inf components")
    return flow


def write_flow_file(flow: np.ndarray) -> bytes:
    """Bit-exact inverse of read_flow_file. Refuses non-finite fields."""
    flow = validate_flow(flow)
    height, width = flow.shape[:2]
    header = struct.pack("<fii", FLO_MAGIC, width, height)
    return header + np.ascontiguousarray(flow, dtype="<f4").tobytes()


def block_matching_flow(a: np.ndarray, b: np.ndarray, block: int = 8,
                        radius: int = 4) -> np.ndarray:
    """Exhaustive-search integer flow between two frames.

    For each non-overlapping block of `a`, the displacement within +-radius
    minimizing the grayscale SSD against `b`; ties go to the smallest
    displacement magnitude, then displacement-grid scan order. Windows that
    would leave the image are not considered.
    """
    a = validate_frame(a)
    b = validate_frame(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"frame shapes differ: {a.shape} vs {b.shape}")
    if block < 4:
        raise ValueError(f"block must be >= 4, got {block}")
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    return kernels.block_match(grayscale(a), grayscale(b), block, radius)


def flow_magnitude(flow: np.ndarray) -> np.ndarray:
    """Per-pixel Euclidean norm of the flow, as a (H, W) float64 field."""
    flow = validate_flow(flow)
    return np.hypot(flow[..., 0].astype(np.float64), flow[..., 1].astype(np.float64))


def mean_magnitude(flow: np.ndarray) -> float:
    """Arithmetic mean of per-pixel flow magnitudes."""
    return float(flow_magnitude(flow).mean())
