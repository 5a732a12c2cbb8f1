"""Motion token pruning.

Camera-compensated flow magnitude, weighted by a saliency map, is pooled onto
the vision encoder's patch grid; the top-k% patches (over the positive
support) survive. Degenerate frames fail open: an all-kept mask is returned
rather than dropping content.
"""

import base64
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import (AllZeroScore, CountMismatch, DimensionMismatch,
                     GridTooFine, ProviderFailure)
from .flowkit import flow_magnitude, validate_flow
from .homography import RansacConfig, compensate_camera_motion


@dataclass(frozen=True)
class MtpConfig:
    """Pruning knobs.

    keep_percent: share of positive-support patches kept. patch_grid is
    (grid_w, grid_h). motion_floor zeroes residual magnitudes below it (px)
    so compensation noise on static content does not count as motion.
    """
    keep_percent: float = 50.0
    patch_grid: tuple[int, int] = (13, 13)
    quantile: float = 0.5
    motion_floor: float = 0.1
    sample_stride: int = 16
    ransac: RansacConfig = field(default_factory=RansacConfig)

    def __post_init__(self):
        if not 0.0 < self.keep_percent <= 100.0:
            raise ValueError("keep_percent must be in (0, 100]")
        if self.patch_grid[0] < 1 or self.patch_grid[1] < 1:
            raise ValueError("patch grid dims must be >= 1")
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must be in (0, 1)")

    @property
    def tokens_per_frame(self) -> int:
        return self.patch_grid[0] * self.patch_grid[1]


@dataclass(frozen=True)
class TokenMask:
    """Boolean keep/drop decision per patch of one frame."""
    grid_w: int
    grid_h: int
    kept: np.ndarray          # (grid_h, grid_w) bool, row-major
    keep_fraction: float

    def __post_init__(self):
        if self.kept.shape != (self.grid_h, self.grid_w):
            raise DimensionMismatch(
                f"mask shape {self.kept.shape} vs grid {(self.grid_h, self.grid_w)}")

    @property
    def popcount(self) -> int:
        return int(self.kept.sum())

    @classmethod
    def all_kept(cls, grid_w: int, grid_h: int) -> "TokenMask":
        return cls(grid_w=grid_w, grid_h=grid_h,
                   kept=np.ones((grid_h, grid_w), dtype=bool), keep_fraction=1.0)

    def to_base64(self) -> str:
        """Row-major bits, MSB first within each byte, zero-padded."""
        return base64.b64encode(np.packbits(self.kept.ravel()).tobytes()).decode("ascii")

    @classmethod
    def from_base64(cls, data: str, grid_w: int, grid_h: int,
                    keep_fraction: float = 0.0) -> "TokenMask":
        raw = np.frombuffer(base64.b64decode(data), dtype=np.uint8)
        bits = np.unpackbits(raw)[: grid_w * grid_h].astype(bool)
        return cls(grid_w=grid_w, grid_h=grid_h,
                   kept=bits.reshape(grid_h, grid_w), keep_fraction=keep_fraction)


def motion_saliency_map(compensated_flow: np.ndarray,
                        saliency: np.ndarray) -> np.ndarray:
    """Per-pixel product of flow magnitude and saliency weight."""
    flow = validate_flow(compensated_flow)
    saliency = np.asarray(saliency, dtype=np.float64)
    if saliency.shape != flow.shape[:2]:
        raise DimensionMismatch(
            f"saliency {saliency.shape} vs flow {flow.shape[:2]}")
    return flow_magnitude(flow) * saliency


def _stable_top_order(flat_scores: np.ndarray) -> np.ndarray:
    # decreasing score, ties resolved by row-major position
    return np.argsort(-flat_scores, kind="stable")


def pixel_mask(score: np.ndarray, quantile: float = 0.5) -> np.ndarray:
    """Keep the top (1 - quantile) share of strictly positive pixels.

    Exactly ceil((1 - quantile) * P) pixels where P is the positive support;
    zero-score pixels are never kept. Raises AllZeroScore when P = 0.
    """
    if not 0.0 < quantile < 1.0:
        raise ValueError("quantile must be in (0, 1)")
    score = np.asarray(score, dtype=np.float64)
    flat = score.ravel()
    positive = flat > 0.0
    support = int(positive.sum())
    if support == 0:
        raise AllZeroScore("score field has no positive pixels")
    keep = math.ceil((1.0 - quantile) * support)
    order = _stable_top_order(flat)
    order = order[positive[order]]
    mask = np.zeros(flat.shape, dtype=bool)
    mask[order[:keep]] = True
    return mask.reshape(score.shape)


def pool_to_grid(score: np.ndarray, grid_w: int, grid_h: int) -> np.ndarray:
    """Average-pool a score field onto the patch grid by equal partition."""
    score = np.asarray(score, dtype=np.float64)
    h, w = score.shape
    if h < grid_h or w < grid_w:
        raise GridTooFine(f"score {h}x{w} finer than grid {grid_h}x{grid_w}")
    ys = (np.arange(grid_h + 1) * h) // grid_h
    xs = (np.arange(grid_w + 1) * w) // grid_w
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(np.cumsum(score, axis=0), axis=1, out=integral[1:, 1:])
    sums = (integral[ys[1:]][:, xs[1:]] - integral[ys[:-1]][:, xs[1:]]
            - integral[ys[1:]][:, xs[:-1]] + integral[ys[:-1]][:, xs[:-1]])
    areas = np.outer(np.diff(ys), np.diff(xs))
    return sums / areas


def patch_mask(score: np.ndarray, config: MtpConfig = MtpConfig()) -> TokenMask:
    """Pool pixel scores onto the patch grid and keep the top-k% patches.

    The keep count is ceil(keep_percent/100 * positive_support) where the
    support counts patches with a strictly positive pooled score; ties break
    row-major. Raises AllZeroScore when no patch has positive score.
    """
    grid_w, grid_h = config.patch_grid
    pooled = pool_to_grid(score, grid_w, grid_h)
    flat = pooled.ravel()
    positive = flat > 0.0
    support = int(positive.sum())
    if support == 0:
        raise AllZeroScore("no patch has positive pooled score")
    keep = math.ceil(config.keep_percent / 100.0 * support)
    order = _stable_top_order(flat)
    order = order[positive[order]]
    kept = np.zeros(flat.shape, dtype=bool)
    kept[order[:keep]] = True
    return TokenMask(grid_w=grid_w, grid_h=grid_h,
                     kept=kept.reshape(grid_h, grid_w),
                     keep_fraction=config.keep_percent / 100.0)


def prune_tokens(frame_tokens, mask: TokenMask) -> list:
    """Tokens whose patch bit is set, preserving row-major order."""
    tokens = list(frame_tokens)
    if len(tokens) != mask.grid_w * mask.grid_h:
        raise CountMismatch(
            f"{len(tokens)} tokens for a {mask.grid_w}x{mask.grid_h} grid")
    bits = mask.kept.ravel()
    return [t for t, b in zip(tokens, bits) if b]


def mtp_frame(pair_index: int,
              flow_provider: Callable[[int], np.ndarray],
              saliency_provider: Callable[[int], np.ndarray],
              config: MtpConfig = MtpConfig()) -> TokenMask:
    """Full per-frame chain: flow -> compensation -> saliency weight -> mask.

    Fail-open cases (all-kept mask): no homography consensus, or no motion
    left after compensation and the noise floor.
    """
    grid_w, grid_h = config.patch_grid
    try:
        flow = flow_provider(pair_index)
    except Exception as exc:
        raise ProviderFailure(f"flow for pair ({pair_index}, {pair_index + 1}): {exc}") from exc
    result = compensate_camera_motion(flow, config.sample_stride, config.ransac)
    if not result.compensated:
        return TokenMask.all_kept(grid_w, grid_h)
    magnitude = flow_magnitude(result.flow)
    magnitude[magnitude < config.motion_floor] = 0.0
    try:
        saliency = saliency_provider(pair_index)
    except Exception as exc:
        raise ProviderFailure(f"saliency for frame {pair_index}: {exc}") from exc
    saliency = np.asarray(saliency, dtype=np.float64)
    if saliency.shape != magnitude.shape:
        raise DimensionMismatch(
            f"saliency {saliency.shape} vs flow {magnitude.shape}")
    score = magnitude * saliency
    try:
        return patch_mask(score, config)
    except AllZeroScore:
        return TokenMask.all_kept(grid_w, grid_h)


def render_overlay(frame: np.ndarray, mask: TokenMask,
                   dim_factor: float = 0.35) -> np.ndarray:
    """Debug visualization: kept patches at full brightness, pruned dimmed."""
    h, w = frame.shape[:2]
    ys = (np.arange(mask.grid_h + 1) * h) // mask.grid_h
    xs = (np.arange(mask.grid_w + 1) * w) // mask.grid_w
    out = frame.astype(np.float64)
    for gy in range(mask.grid_h):
        for gx in range(mask.grid_w):
            if not mask.kept[gy, gx]:
                out[ys[gy]:ys[gy + 1], xs[gx]:xs[gx + 1]] *= dim_factor
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
