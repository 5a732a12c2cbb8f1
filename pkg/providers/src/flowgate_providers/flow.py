"""Flow estimation backends for the exporter.

`tiny` is a dependency-light pyramidal Lucas-Kanade estimator used in tests
and air-gapped runs; `raft` wraps torchvision's RAFT and accepts a local
checkpoint (the iteration flag maps to RAFT's update steps: few iterations
give the coarse flow used for event splitting, more give the fine flow used
for token pruning).
"""

import numpy as np
from scipy import ndimage

from .common import to_gray


class TinyFlow:
    """Dense pyramidal Lucas-Kanade. Deterministic; zero flow on identical
    frames by construction."""

    name = "tiny-lk"

    def __init__(self, iterations: int = 12, levels: int = 3,
                 window_sigma: float = 2.0):
        self.iterations = max(1, iterations)
        self.levels = max(1, levels)
        self.window_sigma = window_sigma

    def __call__(self, frame_a: np.ndarray, frame_b: np.ndarray) -> np.ndarray:
        ga, gb = to_gray(frame_a), to_gray(frame_b)
        pyr_a, pyr_b = [ga], [gb]
        for _ in range(self.levels - 1):
            if min(pyr_a[-1].shape) < 16:
                break
            pyr_a.append(self._down(pyr_a[-1]))
            pyr_b.append(self._down(pyr_b[-1]))
        flow = np.zeros(pyr_a[-1].shape + (2,), dtype=np.float64)
        for la, lb in zip(reversed(pyr_a), reversed(pyr_b)):
            if flow.shape[:2] != la.shape:
                flow = self._upsample(flow, la.shape)
            for _ in range(self.iterations):
                flow += self._step(la, lb, flow)
        return flow.astype(np.float32)

    @staticmethod
    def _down(img: np.ndarray) -> np.ndarray:
        return ndimage.gaussian_filter(img, 1.0)[::2, ::2]

    @staticmethod
    def _upsample(flow: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
        zy = shape[0] / flow.shape[0]
        zx = shape[1] / flow.shape[1]
        up = np.stack([ndimage.zoom(flow[..., c], (zy, zx), order=1)
                       for c in range(2)], axis=-1)
        up[..., 0] *= zx
        up[..., 1] *= zy
        return up

    def _step(self, a: np.ndarray, b: np.ndarray, flow: np.ndarray) -> np.ndarray:
        h, w = a.shape
        gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
        coords = np.stack([gy + flow[..., 1], gx + flow[..., 0]])
        warped = ndimage.map_coordinates(b, coords, order=1, mode="nearest")
        ref = 0.5 * (a + warped)
        ix = np.gradient(ref, axis=1)
        iy = np.gradient(ref, axis=0)
        it = warped - a
        s = self.window_sigma
        ixx = ndimage.gaussian_filter(ix * ix, s)
        ixy = ndimage.gaussian_filter(ix * iy, s)
        iyy = ndimage.gaussian_filter(iy * iy, s)
        ixt = ndimage.gaussian_filter(ix * it, s)
        iyt = ndimage.gaussian_filter(iy * it, s)
        det = ixx * iyy - ixy * ixy
        ok = det > 1e-6
        safe = np.where(ok, det, 1.0)
        du = np.where(ok, -(iyy * ixt - ixy * iyt) / safe, 0.0)
        dv = np.where(ok, -(ixx * iyt - ixy * ixt) / safe, 0.0)
        # one-pixel trust region per sweep keeps the linearization honest
        return np.clip(np.stack([du, dv], axis=-1), -1.0, 1.0)


class RaftFlow:
    """torchvision RAFT (small variant); checkpoint optional.

    Without a checkpoint the network is randomly initialized from the seed:
    only useful for wiring tests, never for real exports.
    """

    name = "raft-small"

    def __init__(self, iterations: int = 12, checkpoint: str | None = None,
                 seed: int = 0):
        import torch
        from torchvision.models.optical_flow import raft_small

        self.iterations = max(1, iterations)
        self._torch = torch
        torch.manual_seed(seed)
        self.model = raft_small(weights=None)
        if checkpoint:
            state = torch.load(checkpoint, map_location="cpu")
            self.model.load_state_dict(state)
        self.model.eval()

    def __call__(self, frame_a: np.ndarray, frame_b: np.ndarray) -> np.ndarray:
        torch = self._torch

        def prep(frame):
            t = torch.from_numpy(frame.copy()).permute(2, 0, 1).float()
            t = t / 127.5 - 1.0
            return t[None]

        h, w = frame_a.shape[:2]
        pad_h = (8 - h % 8) % 8
        pad_w = (8 - w % 8) % 8
        ta, tb = prep(frame_a), prep(frame_b)
        if pad_h or pad_w:
            pad = (0, pad_w, 0, pad_h)
            ta = torch.nn.functional.pad(ta, pad, mode="replicate")
            tb = torch.nn.functional.pad(tb, pad, mode="replicate")
        with torch.no_grad():
            flows = self.model(ta, tb, num_flow_updates=self.iterations)
        flow = flows[-1][0].permute(1, 2, 0).numpy()[:h, :w]
        return flow.astype(np.float32)


def make_backend(name: str, iterations: int, checkpoint: str | None,
                 seed: int):
    if name == "tiny":
        return TinyFlow(iterations=iterations)
    if name == "raft":
        return RaftFlow(iterations=iterations, checkpoint=checkpoint, seed=seed)
    raise ValueError(f"unknown flow backend {name!r}")
