"""Motion token pruning: masks, pooling, and the fail-open paths."""

import math

import numpy as np
import pytest

from flowgate import (MtpConfig, TokenMask, homography_induced_flow,
                      motion_saliency_map, mtp_frame, patch_mask, pixel_mask,
                      prune_tokens)
from flowgate.errors import (AllZeroScore, CountMismatch, DimensionMismatch,
                             GridTooFine, ProviderFailure)
from flowgate.mtp import pool_to_grid
from tests.conftest import random_homography

SIZE = 128  # frame edge for the synthetic scenes; grid stride 16 -> 8x8 points


def patch_edges(grid: int, size: int = SIZE) -> np.ndarray:
    return (np.arange(grid + 1) * size) // grid


def build_scene(extra_homography=None, high_patches: int = 81):
    """Synthetic flow + saliency whose correct mask is known by construction.

    A 2x2-patch object moves 5 px; the background jiggles with per-patch
    magnitude levels (0.8 px for `high_patches` patches, 0.3 px for the rest,
    alternating sign by pixel column so no global motion accumulates). With
    k=50 and full support, the kept set is exactly the object plus the
    high-level patches.
    """
    grid = 13
    ys = patch_edges(grid)
    xs = patch_edges(grid)
    object_patches = {(5, 5), (5, 6), (6, 5), (6, 6)}
    levels = np.full((grid, grid), 0.3)
    assigned = 0
    for gy in range(grid):
        for gx in range(grid):
            if (gy, gx) in object_patches:
                continue
            if assigned < high_patches:
                levels[gy, gx] = 0.8
                assigned += 1

    flow = np.zeros((SIZE, SIZE, 2), dtype=np.float64)
    sal = np.full((SIZE, SIZE), 0.5)
    sign = np.broadcast_to(np.where(np.arange(SIZE) % 2 == 0, 1.0, -1.0),
                           (SIZE, SIZE))
    for gy in range(grid):
        for gx in range(grid):
            sl = np.s_[ys[gy]:ys[gy + 1], xs[gx]:xs[gx + 1]]
            flow[sl + (0,)] = levels[gy, gx] * sign[sl]
    # the object spans patches (5..6, 5..6) exactly
    obj = np.s_[ys[5]:ys[7], xs[5]:xs[7]]
    flow[obj + (0,)] = 4.0
    flow[obj + (1,)] = 3.0
    sal[obj] = 1.0

    if extra_homography is not None:
        flow = flow + homography_induced_flow(extra_homography, SIZE, SIZE)
    return flow.astype(np.float32), sal, object_patches


def scene_mask(flow, sal, config=MtpConfig()):
    return mtp_frame(0, lambda t: flow, lambda t: sal, config)


def test_motion_saliency_identity_weight(rng):
    flow = rng.normal(0, 2, (8, 8, 2)).astype(np.float32)
    ones = np.ones((8, 8))
    got = motion_saliency_map(flow, ones)
    assert np.allclose(got, np.hypot(flow[..., 0], flow[..., 1]))
    assert not motion_saliency_map(flow, np.zeros((8, 8))).any()


def test_motion_saliency_pointwise():
    flow = np.zeros((4, 8, 2), dtype=np.float32)
    flow[:, :4, 0] = 2.0
    got = motion_saliency_map(flow, np.full((4, 8), 0.5))
    assert np.allclose(got[:, :4], 1.0)
    assert not got[:, 4:].any()


def test_motion_saliency_dim_mismatch():
    with pytest.raises(DimensionMismatch):
        motion_saliency_map(np.zeros((4, 4, 2), np.float32), np.ones((5, 5)))


def test_pixel_mask_distinct_scores():
    score = np.arange(1.0, 101.0).reshape(10, 10)
    mask = pixel_mask(score, 0.5)
    assert mask.sum() == 50
    assert mask.ravel()[50:].all() and not mask.ravel()[:50].any()


def test_pixel_mask_zero_support_excluded():
    score = np.zeros(100)
    score[50:] = np.arange(1.0, 51.0)
    mask = pixel_mask(score.reshape(10, 10), 0.5)
    assert mask.sum() == 25  # half of the positive support
    assert not mask.ravel()[:50].any()


def test_pixel_mask_uniform_ties_scan_order():
    mask = pixel_mask(np.ones((3, 7)), 0.5)
    keep = math.ceil(0.5 * 21)
    assert mask.ravel()[:keep].all() and not mask.ravel()[keep:].any()


def test_pixel_mask_all_zero():
    with pytest.raises(AllZeroScore):
        pixel_mask(np.zeros((4, 4)), 0.5)


def test_patch_mask_pooled_example():
    score = np.ones((26, 26))
    score[4:6, 8:10] = 10.0  # one 2x2-pixel patch pools to 10
    mask = patch_mask(score, MtpConfig())
    assert mask.popcount == 85  # ceil(0.5 * 169)
    assert mask.kept[2, 4]


def test_patch_mask_all_zero_and_k100():
    with pytest.raises(AllZeroScore):
        patch_mask(np.zeros((26, 26)), MtpConfig())
    score = np.zeros((26, 26))
    score[:, :13] = 1.0
    mask = patch_mask(score, MtpConfig(keep_percent=100.0))
    pooled_positive = pool_to_grid(score, 13, 13) > 0
    assert np.array_equal(mask.kept, pooled_positive)


def test_patch_mask_grid_too_fine():
    with pytest.raises(GridTooFine):
        patch_mask(np.ones((8, 8)), MtpConfig(patch_grid=(13, 13)))


def test_pool_to_grid_uneven(rng):
    score = rng.uniform(0, 1, (20, 17))
    pooled = pool_to_grid(score, 5, 4)
    assert pooled.shape == (4, 5)
    assert pooled.mean() == pytest.approx(score.mean(), rel=0.05)


def test_prune_tokens_identity_and_empty():
    mask = TokenMask.all_kept(13, 13)
    tokens = list(range(169))
    assert prune_tokens(tokens, mask) == tokens
    none = TokenMask(13, 13, np.zeros((13, 13), bool), 0.0)
    assert prune_tokens(tokens, none) == []


def test_prune_tokens_preserves_order():
    kept = np.zeros((13, 13), bool)
    kept.ravel()[:85] = True
    mask = TokenMask(13, 13, kept, 0.5)
    out = prune_tokens(list(range(169)), mask)
    assert out == list(range(85))
    with pytest.raises(CountMismatch):
        prune_tokens(list(range(10)), mask)


def test_mask_base64_round_trip(rng):
    kept = rng.uniform(0, 1, (13, 13)) > 0.5
    mask = TokenMask(13, 13, kept, 0.5)
    back = TokenMask.from_base64(mask.to_base64(), 13, 13, 0.5)
    assert np.array_equal(back.kept, kept)


def test_scene_object_among_kept():
    flow, sal, object_patches = build_scene()
    mask = scene_mask(flow, sal)
    assert mask.popcount == 85  # full positive support at the defaults
    for gy, gx in object_patches:
        assert mask.kept[gy, gx]


def test_scene_static_background_support_rule():
    # background exactly still: support is the 4 object patches, keep 2
    flow, sal, object_patches = build_scene(high_patches=0)
    flow[..., 0][np.abs(flow[..., 0]) < 1.0] = 0.0
    mask = scene_mask(flow, sal)
    assert mask.popcount == 2
    kept = {tuple(idx) for idx in np.argwhere(mask.kept)}
    assert kept <= object_patches


def test_pan_only_fails_open(rng):
    h = random_homography(rng, scale=0.01, shift=4.0, perspective=2e-5)
    flow = homography_induced_flow(h, SIZE, SIZE)
    mask = scene_mask(flow, np.full((SIZE, SIZE), 0.7))
    assert mask.popcount == 169  # compensation leaves nothing above the floor


def test_no_consensus_fails_open(rng):
    flow = rng.uniform(-40, 40, (SIZE, SIZE, 2)).astype(np.float32)
    mask = scene_mask(flow, np.ones((SIZE, SIZE)))
    # either RANSAC found no consensus (all kept) or a fit left real motion
    if mask.popcount == 169:
        assert mask.kept.all()


def test_camera_motion_invariance(rng):
    flow_a, sal, _ = build_scene()
    base = flow_a.copy()
    h = random_homography(rng, scale=0.01, shift=3.0, perspective=2e-5)
    flow_b, _, _ = build_scene(extra_homography=h)
    mask_a = scene_mask(base, sal)
    mask_b = scene_mask(flow_b, sal)
    flipped = int(np.sum(mask_a.kept != mask_b.kept))
    assert flipped <= math.ceil(0.02 * 169)


def test_keep_percent_monotone_containment():
    flow, sal, _ = build_scene()
    masks = {k: scene_mask(flow, sal, MtpConfig(keep_percent=k))
             for k in (25.0, 50.0, 75.0)}
    assert (masks[25.0].kept <= masks[50.0].kept).all()
    assert (masks[50.0].kept <= masks[75.0].kept).all()


def test_saliency_gating():
    flow, sal, _ = build_scene()
    ys = patch_edges(13)
    sal = sal.copy()
    sal[ys[0]:ys[1], ys[0]:ys[1]] = 0.0  # kill patch (0, 0) entirely
    mask = scene_mask(flow, sal)
    assert not mask.kept[0, 0]
    assert mask.popcount == math.ceil(0.5 * 168)


def test_mtp_deterministic():
    flow, sal, _ = build_scene()
    a = scene_mask(flow, sal)
    b = scene_mask(flow.copy(), sal.copy())
    assert np.array_equal(a.kept, b.kept)


def test_mtp_provider_failure():
    def bad_flow(t):
        raise OSError("flow store offline")
    with pytest.raises(ProviderFailure):
        mtp_frame(0, bad_flow, lambda t: np.ones((8, 8)))
