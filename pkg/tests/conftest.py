"""Shared synthetic-data helpers for the test suite."""

import numpy as np
import pytest
from PIL import Image


def make_texture(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Distinct random RGB noise texture; sharp autocorrelation peak."""
    return rng.integers(0, 256, (height, width, 3)).astype(np.uint8)


def jitter_frame(rng: np.random.Generator, base: np.ndarray,
                 sigma: float = 3.0) -> np.ndarray:
    """Per-frame Gaussian pixel jitter in 8-bit units (sigma <= 5)."""
    noisy = base.astype(np.float64) + rng.normal(0.0, sigma, base.shape)
    return np.clip(np.rint(noisy), 0, 255).astype(np.uint8)


def make_scene_video(rng: np.random.Generator, n_scenes: int,
                     scene_len_lo: int = 6, scene_len_hi: int = 14,
                     size: int = 64, sigma: float = 3.0):
    """Noise-texture scenes joined by hard cuts.

    Returns (frames, cut_starts): cut_starts are the first frames of scenes
    2..K, the ground-truth boundaries.
    """
    frames = []
    cut_starts = []
    for s in range(n_scenes):
        base = make_texture(rng, size, size)
        length = int(rng.integers(scene_len_lo, scene_len_hi + 1))
        if s > 0:
            cut_starts.append(len(frames))
        for _ in range(length):
            frames.append(jitter_frame(rng, base, sigma))
    return frames, cut_starts


def boundary_scores(detected, truth, tolerance: int = 1):
    """One-to-one boundary matching within a frame tolerance."""
    detected = sorted(detected)
    remaining = sorted(truth)
    matched = 0
    for b in detected:
        hit = next((t for t in remaining if abs(t - b) <= tolerance), None)
        if hit is not None:
            remaining.remove(hit)
            matched += 1
    precision = matched / len(detected) if detected else 1.0
    recall = matched / len(truth) if truth else 1.0
    return precision, recall


def random_homography(rng: np.random.Generator, scale: float = 0.05,
                      shift: float = 5.0, perspective: float = 1e-4) -> np.ndarray:
    """Well-conditioned random homography: near-affine plus mild perspective."""
    h = np.eye(3)
    h[:2, :2] += rng.uniform(-scale, scale, (2, 2))
    h[0, 2] = rng.uniform(-shift, shift)
    h[1, 2] = rng.uniform(-shift, shift)
    h[2, :2] = rng.uniform(-perspective, perspective, 2)
    return h


def write_frames(directory, frames) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        Image.fromarray(frame).save(directory / f"frame_{i:06d}.png")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
