"""Fixtures for the exporter tests."""

import numpy as np
import pytest
from PIL import Image
from scipy import ndimage


def smooth_texture(rng, size=64):
    """Band-limited noise: enough gradient structure for flow estimation."""
    base = ndimage.gaussian_filter(rng.uniform(0, 255, (size, size)), 2.0)
    base = (base - base.min()) / (base.max() - base.min()) * 255
    return np.stack([base] * 3, axis=-1).astype(np.uint8)


def write_frames(directory, frames):
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        Image.fromarray(frame).save(directory / f"frame_{i:06d}.png")


@pytest.fixture
def rng():
    return np.random.default_rng(321)


@pytest.fixture
def frames_dir(tmp_path, rng):
    base = smooth_texture(rng)
    frames = [np.roll(base, (0, t), axis=(0, 1)) for t in range(4)]
    target = tmp_path / "frames"
    write_frames(target, frames)
    return target


@pytest.fixture
def duplicate_frames_dir(tmp_path, rng):
    base = smooth_texture(rng)
    target = tmp_path / "dup_frames"
    write_frames(target, [base] * 5)
    return target
