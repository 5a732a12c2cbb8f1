"""Dynamic event split: two-stage partitioning of a frame sequence.

Stage one thresholds an HSV-space difference series to get coarse cut
candidates; stage two confirms each candidate with optical-flow magnitudes
over a small temporal window and emits the frame index of the strongest flow
as the final boundary.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (BoundaryOutOfRange, DimensionMismatch, ProviderFailure,
                     TooFewFrames)
from .flowkit import mean_magnitude, validate_frame

ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class DesConfig:
    """Knobs of the two-stage split.

    theta: difference threshold, or "adaptive" for mean + adaptive_sigma * std
    of the series. eta: mean flow magnitude (px) a window flow must exceed to
    confirm a boundary. window: number of flows inspected around a candidate,
    odd. min_event_len: candidates closer than this merge (larger difference
    wins).
    """
    theta: float | str = ADAPTIVE
    eta: float = 1.0
    window: int = 3
    min_event_len: int = 2
    adaptive_sigma: float = 2.0

    def __post_init__(self):
        if isinstance(self.theta, str) and self.theta != ADAPTIVE:
            raise ValueError(f"theta must be a number or {ADAPTIVE!r}")
        if not isinstance(self.theta, str) and self.theta < 0:
            raise ValueError("theta must be nonnegative")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 1")
        if self.min_event_len < 1:
            raise ValueError("min_event_len must be >= 1")


@dataclass(frozen=True)
class EventSegment:
    """Inclusive frame range [start, end] with its anchor (middle) frame."""
    start: int
    end: int
    anchor: int

    def __post_init__(self):
        if not self.start <= self.anchor <= self.end:
            raise ValueError(f"anchor {self.anchor} outside [{self.start}, {self.end}]")

    @classmethod
    def from_range(cls, start: int, end: int) -> "EventSegment":
        return cls(start=start, end=end, anchor=(start + end) // 2)

    @property
    def length(self) -> int:
        return self.end - self.start + 1


def rgb_to_hsv(frame: np.ndarray) -> np.ndarray:
    """Hexcone HSV of one frame: H in [0, 1) circular, S and V in [0, 1]."""
    return kernels.rgb_to_hsv(validate_frame(frame))


def frame_difference_series(frames: Sequence[np.ndarray]) -> np.ndarray:
    """Per-transition mean squared HSV distance, length N-1.

    Hue distance is circular (min(|dh|, 1-|dh|)); the per-pixel squared
    distances are averaged over the frame so values are resolution
    independent.
    """
    if len(frames) < 2:
        raise TooFewFrames(f"need >= 2 frames, got {len(frames)}")
    shape = validate_frame(frames[0]).shape
    for f in frames[1:]:
        if validate_frame(f).shape != shape:
            raise DimensionMismatch(f"frame shapes differ: {shape} vs {np.asarray(f).shape}")
    stack = np.ascontiguousarray(np.stack(frames))
    return kernels.hsv_diff_pairs(stack)


def resolve_theta(series: np.ndarray, config: DesConfig) -> float:
    if config.theta == ADAPTIVE:
        return float(series.mean() + config.adaptive_sigma * series.std())
    return float(config.theta)


def coarse_boundaries(series: np.ndarray, config: DesConfig) -> list[int]:
    """Indices where the difference series exceeds theta, merged by proximity.

    Candidates within min_event_len of an already-accepted one are dropped;
    acceptance runs in decreasing-difference order (ties to the earlier
    index), so the larger difference wins a conflict.
    """
    series = np.asarray(series, dtype=np.float64)
    theta = resolve_theta(series, config)
    candidates = np.flatnonzero(series > theta)
    if candidates.size == 0:
        return []
    order = sorted(candidates, key=lambda t: (-series[t], t))
    accepted: list[int] = []
    for t in order:
        if all(abs(t - s) >= config.min_event_len for s in accepted):
            accepted.append(int(t))
    return sorted(accepted)


def refine_boundaries(frame_count: int, candidates: Sequence[int],
                      flow_provider: Callable[[int], np.ndarray],
                      config: DesConfig) -> list[int]:
    """Confirm coarse candidates against flow magnitudes in a window.

    For candidate t the flows starting at t - window//2 .. t + window//2
    (clipped to valid pairs) are inspected; if the largest mean magnitude
    exceeds eta, the start frame of that flow becomes a final boundary.
    flow_provider(s) must return the flow between frames s and s+1.
    """
    half = config.window // 2
    cache: dict[int, float] = {}

    def magnitude_at(s: int) -> float:
        if s not in cache:
            try:
                cache[s] = mean_magnitude(flow_provider(s))
            except Exception as exc:
                raise ProviderFailure(f"flow for pair ({s}, {s + 1}): {exc}") from exc
        return cache[s]

    final: set[int] = set()
    for t in candidates:
        starts = range(max(0, t - half), min(frame_count - 2, t + half) + 1)
        mags = [magnitude_at(s) for s in starts]
        if not mags:
            continue
        best = int(np.argmax(mags))  # first maximum wins ties
        if mags[best] > config.eta:
            boundary = list(starts)[best]
            if boundary > 0:  # frame 0 is never a valid split point
                final.add(boundary)
    return sorted(final)


def split_events(frame_count: int, boundaries: Sequence[int]) -> list[EventSegment]:
    """Partition [0, frame_count) at the given boundary frames.

    Each boundary starts a new segment; an empty boundary set yields a single
    segment covering the whole video.
    """
    if frame_count < 1:
        raise TooFewFrames("cannot split an empty sequence")
    for b in boundaries:
        if not 0 < b < frame_count:
            raise BoundaryOutOfRange(f"boundary {b} outside (0, {frame_count})")
    cuts = sorted(set(int(b) for b in boundaries))
    starts = [0] + cuts
    ends = [c - 1 for c in cuts] + [frame_count - 1]
    return [EventSegment.from_range(s, e) for s, e in zip(starts, ends)]
