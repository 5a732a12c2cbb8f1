"""Homography estimation and camera-motion compensation.

A global homography is fit to grid-sampled flow correspondences with RANSAC
over 4-point samples (each fit by a normalized direct linear transform), and
the flow it induces is subtracted to isolate subject motion.
"""

from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, DimensionMismatch, NoConsensus, ProjectionAtInfinity
from .flowkit import validate_flow


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 1000
    threshold: float = 3.0        # inlier reprojection error, px
    min_inlier_ratio: float = 0.3
    seed: int = 0
    det_epsilon: float = 1e-10    # invertibility floor for accepted models


def _normalize_points(pts: np.ndarray):
    # Hartley normalization: centroid to origin, mean distance sqrt(2)
    centroid = pts.mean(axis=0)
    dist = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    scale = np.sqrt(2.0) / max(dist, 1e-12)
    t = np.array([[scale, 0.0, -scale * centroid[0]],
                  [0.0, scale, -scale * centroid[1]],
                  [0.0, 0.0, 1.0]])
    ph = np.column_stack([pts, np.ones(len(pts))])
    pn = ph @ t.T
    return pn[:, :2], t


def _dlt(src: np.ndarray, dst: np.ndarray):
    """Direct linear transform on normalized coordinates; None if unstable."""
    srcn, t0 = _normalize_points(src)
    dstn, t1 = _normalize_points(dst)
    n = len(src)
    x, y = srcn[:, 0], srcn[:, 1]
    u, v = dstn[:, 0], dstn[:, 1]
    zeros = np.zeros(n)
    ones = np.ones(n)
    a = np.empty((2 * n, 9))
    a[0::2] = np.column_stack([x, y, ones, zeros, zeros, zeros, -u * x, -u * y, -u])
    a[1::2] = np.column_stack([zeros, zeros, zeros, x, y, ones, -v * x, -v * y, -v])
    try:
        _, sv, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError:
        return None
    if n == 4 and sv[-2] < 1e-9 * max(sv[0], 1e-30):
        return None  # rank-deficient minimal sample
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t1) @ hn @ t0
    if abs(h[2, 2]) < 1e-12:
        return None
    return h / h[2, 2]


def _project(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    ph = np.column_stack([pts, np.ones(len(pts))])
    q = ph @ h.T
    w = q[:, 2]
    w = np.where(np.abs(w) < 1e-12, 1e-12, w)
    return q[:, :2] / w[:, None]


def _collinear(pts: np.ndarray, rel_tol: float = 1e-9) -> bool:
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return sv[1] <= rel_tol * max(sv[0], 1e-30)


def estimate_homography(src: np.ndarray, dst: np.ndarray,
                        config: RansacConfig = RansacConfig()) -> np.ndarray:
    """RANSAC homography from point correspondences src[i] -> dst[i].

    Returns a 3x3 float64 matrix normalized so the bottom-right entry is 1,
    refit on all inliers of the best minimal-sample model. Deterministic for
    a fixed config.seed.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise DimensionMismatch(f"correspondence shapes {src.shape} vs {dst.shape}")
    n = len(src)
    if n < 4:
        raise Degenerate(f"need >= 4 correspondences, got {n}")
    if _collinear(src) or _collinear(dst):
        raise Degenerate("correspondences are collinear")

    rng = np.random.default_rng(config.seed)
    best_count = 0
    best_inliers = None
    for _ in range(config.iterations):
        idx = rng.choice(n, size=4, replace=False)
        sample_src = src[idx]
        sample_dst = dst[idx]
        if _collinear(sample_src, 1e-6) or _collinear(sample_dst, 1e-6):
            continue
        h = _dlt(sample_src, sample_dst)
        if h is None:
            continue
        err = np.linalg.norm(_project(h, src) - dst, axis=1)
        inliers = err < config.threshold
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
            if count == n:
                break

    if best_inliers is None or best_count / n < config.min_inlier_ratio:
        raise NoConsensus(f"best inlier ratio {best_count / n:.3f} below "
                          f"{config.min_inlier_ratio}")

    h = _dlt(src[best_inliers], dst[best_inliers])
    if h is None or abs(np.linalg.det(h)) < config.det_epsilon:
        raise NoConsensus("inlier refit is degenerate")
    return h


def homography_induced_flow(h: np.ndarray, width: int, height: int,
                            eps: float = 1e-8) -> np.ndarray:
    """Flow field a global homography induces: project(h, x) - x per pixel."""
    h = np.asarray(h, dtype=np.float64)
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    w = h[2, 0] * gx + h[2, 1] * gy + h[2, 2]
    if np.abs(w).min() < eps:
        raise ProjectionAtInfinity("homography denominator vanishes inside the frame")
    px = (h[0, 0] * gx + h[0, 1] * gy + h[0, 2]) / w
    py = (h[1, 0] * gx + h[1, 1] * gy + h[1, 2]) / w
    return np.stack([px - gx, py - gy], axis=-1).astype(np.float32)


@dataclass(frozen=True)
class CompensationResult:
    flow: np.ndarray              # residual (or original when uncompensated)
    compensated: bool
    homography: np.ndarray | None


def compensate_camera_motion(flow: np.ndarray, sample_stride: int = 16,
                             config: RansacConfig = RansacConfig()) -> CompensationResult:
    """Subtract the flow of a homography fit to grid-sampled correspondences.

    Correspondences are (x, x + flow(x)) on a regular grid. When RANSAC finds
    no consensus (or the fit cannot be applied) the input flow is returned
    unchanged with compensated=False. Degenerate is raised only when the grid
    has fewer than 4 points.
    """
    flow = validate_flow(flow)
    height, width = flow.shape[:2]
    xs = np.arange(sample_stride // 2, width, sample_stride)
    ys = np.arange(sample_stride // 2, height, sample_stride)
    if len(xs) * len(ys) < 4:
        raise Degenerate(f"sampling grid has {len(xs) * len(ys)} points, need >= 4")
    gx, gy = np.meshgrid(xs, ys)
    src = np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    disp = flow[gy.ravel(), gx.ravel()].astype(np.float64)
    dst = src + disp
    try:
        h = estimate_homography(src, dst, config)
        induced = homography_induced_flow(h, width, height)
    except (NoConsensus, Degenerate, ProjectionAtInfinity):
        return CompensationResult(flow=flow, compensated=False, homography=None)
    residual = (flow.astype(np.float64) - induced.astype(np.float64)).astype(np.float32)
    return CompensationResult(flow=residual, compensated=True, homography=h)
