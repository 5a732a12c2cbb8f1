"""Pure-numpy kernel backend.

Reference implementations of the hot loops. The numba backend must produce
identical results: block matching works on integer-valued grayscale so the
SSD sums are exact in both backends regardless of accumulation order.
"""

import numpy as np

from ._common import displacement_ring


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Hexcone RGB -> HSV for a (H, W, 3) uint8 image.

    Returns float64 (H, W, 3) with H in [0, 1) (circular), S and V in [0, 1].
    """
    arr = img.astype(np.float64) / 255.0
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    maxc = arr.max(axis=-1)
    minc = arr.min(axis=-1)
    v = maxc
    c = maxc - minc
    s = np.where(maxc > 0.0, c / np.where(maxc > 0.0, maxc, 1.0), 0.0)
    chroma = np.where(c > 0.0, c, 1.0)
    # branch order r -> g -> b matches the scalar kernel on channel ties
    rm = (c > 0.0) & (maxc == r)
    gm = (c > 0.0) & (maxc == g) & ~rm
    bm = (c > 0.0) & ~rm & ~gm
    h = np.zeros_like(maxc)
    h = np.where(rm, np.mod((g - b) / chroma, 6.0), h)
    h = np.where(gm, (b - r) / chroma + 2.0, h)
    h = np.where(bm, (r - g) / chroma + 4.0, h)
    return np.stack([h / 6.0, s, v], axis=-1)


def hsv_diff_pairs(frames: np.ndarray) -> np.ndarray:
    """Mean squared HSV distance for every consecutive pair of frames.

    frames: (N, H, W, 3) uint8. Returns float64 (N-1,). Hue uses the circular
    distance min(|dh|, 1 - |dh|); S and V use plain differences.
    """
    n = frames.shape[0]
    out = np.empty(n - 1, dtype=np.float64)
    prev = rgb_to_hsv(frames[0])
    for t in range(n - 1):
        cur = rgb_to_hsv(frames[t + 1])
        dh = np.abs(cur[..., 0] - prev[..., 0])
        dh = np.minimum(dh, 1.0 - dh)
        ds = cur[..., 1] - prev[..., 1]
        dv = cur[..., 2] - prev[..., 2]
        out[t] = np.mean(dh * dh + ds * ds + dv * dv)
        prev = cur
    return out


def block_match(gray_a: np.ndarray, gray_b: np.ndarray, block: int, radius: int) -> np.ndarray:
    """Exhaustive integer block matching.

    gray_a, gray_b: (H, W) int64 grayscale. For each non-overlapping block of
    gray_a, finds the displacement (dx, dy) within +-radius minimizing the SSD
    against gray_b, considering only displacements whose target window lies
    fully inside the image. Returns (H, W, 2) float32 with the winning (u, v)
    broadcast over each block.
    """
    h, w = gray_a.shape
    disps = displacement_ring(radius)
    nby = -(-h // block)
    nbx = -(-w // block)
    y0 = np.arange(nby) * block
    y1 = np.minimum(y0 + block, h)
    x0 = np.arange(nbx) * block
    x1 = np.minimum(x0 + block, w)

    a = gray_a.astype(np.int64, copy=False)
    b = gray_b.astype(np.int64, copy=False)
    sentinel = np.iinfo(np.int64).max
    best = np.full((nby, nbx), sentinel, dtype=np.int64)
    bu = np.zeros((nby, nbx), dtype=np.int64)
    bv = np.zeros((nby, nbx), dtype=np.int64)

    sq = np.zeros((h, w), dtype=np.int64)
    for dy, dx in disps:
        # overlap in a-coordinates where b[y+dy, x+dx] exists
        ya0, ya1 = max(0, -dy), min(h, h - dy)
        xa0, xa1 = max(0, -dx), min(w, w - dx)
        if ya0 >= ya1 or xa0 >= xa1:
            continue
        sq[:] = 0
        d = a[ya0:ya1, xa0:xa1] - b[ya0 + dy:ya1 + dy, xa0 + dx:xa1 + dx]
        sq[ya0:ya1, xa0:xa1] = d * d
        integral = np.zeros((h + 1, w + 1), dtype=np.int64)
        np.cumsum(np.cumsum(sq, axis=0), axis=1, out=integral[1:, 1:])
        ssd = (integral[y1][:, x1] - integral[y0][:, x1]
               - integral[y1][:, x0] + integral[y0][:, x0])
        valid = (((y0 + dy >= 0) & (y1 + dy <= h))[:, None]
                 & ((x0 + dx >= 0) & (x1 + dx <= w))[None, :])
        upd = valid & (ssd < best)
        best[upd] = ssd[upd]
        bu[upd] = dx
        bv[upd] = dy

    flow = np.empty((h, w, 2), dtype=np.float32)
    flow[..., 0] = np.repeat(np.repeat(bu, block, axis=0), block, axis=1)[:h, :w]
    flow[..., 1] = np.repeat(np.repeat(bv, block, axis=0), block, axis=1)[:h, :w]
    return flow
