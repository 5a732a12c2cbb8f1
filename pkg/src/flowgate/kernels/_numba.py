"""Numba-compiled kernel backend.

Serial @njit with nogil: callers parallelize across frame pairs with their
own worker pool, so kernels stay re-entrant and results never depend on a
threading layer.
"""

import numpy as np
from numba import njit

from ._common import displacement_ring


@njit(cache=True, inline="always")
def _pixel_hsv(r, g, b):
    maxc = max(r, max(g, b))
    minc = min(r, min(g, b))
    v = maxc
    c = maxc - minc
    s = 0.0 if maxc == 0.0 else c / maxc
    if c == 0.0:
        h = 0.0
    elif maxc == r:
        h = ((g - b) / c) % 6.0
    elif maxc == g:
        h = (b - r) / c + 2.0
    else:
        h = (r - g) / c + 4.0
    return h / 6.0, s, v


@njit(cache=True, nogil=True)
def rgb_to_hsv(img):
    h, w = img.shape[0], img.shape[1]
    out = np.empty((h, w, 3), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            r = img[y, x, 0] / 255.0
            g = img[y, x, 1] / 255.0
            b = img[y, x, 2] / 255.0
            hh, ss, vv = _pixel_hsv(r, g, b)
            out[y, x, 0] = hh
            out[y, x, 1] = ss
            out[y, x, 2] = vv
    return out


@njit(cache=True, nogil=True)
def hsv_diff_pairs(frames):
    n, h, w = frames.shape[0], frames.shape[1], frames.shape[2]
    out = np.empty(n - 1, dtype=np.float64)
    npx = h * w
    for t in range(n - 1):
        acc = 0.0
        for y in range(h):
            for x in range(w):
                r0 = frames[t, y, x, 0] / 255.0
                g0 = frames[t, y, x, 1] / 255.0
                b0 = frames[t, y, x, 2] / 255.0
                r1 = frames[t + 1, y, x, 0] / 255.0
                g1 = frames[t + 1, y, x, 1] / 255.0
                b1 = frames[t + 1, y, x, 2] / 255.0
                h0, s0, v0 = _pixel_hsv(r0, g0, b0)
                h1, s1, v1 = _pixel_hsv(r1, g1, b1)
                dh = abs(h1 - h0)
                if dh > 1.0 - dh:
                    dh = 1.0 - dh
                ds = s1 - s0
                dv = v1 - v0
                acc += dh * dh + ds * ds + dv * dv
        out[t] = acc / npx
    return out


@njit(cache=True, nogil=True)
def _block_match_impl(a, b, block, radius, disps):
    h, w = a.shape
    nby = (h + block - 1) // block
    nbx = (w + block - 1) // block
    flow = np.empty((h, w, 2), dtype=np.float32)
    for by in range(nby):
        y0 = by * block
        y1 = min(y0 + block, h)
        for bx in range(nbx):
            x0 = bx * block
            x1 = min(x0 + block, w)
            best = np.int64(2 ** 62)
            bu = 0
            bv = 0
            for d in range(disps.shape[0]):
                dy = disps[d, 0]
                dx = disps[d, 1]
                if y0 + dy < 0 or y1 + dy > h or x0 + dx < 0 or x1 + dx > w:
                    continue
                ssd = np.int64(0)
                for y in range(y0, y1):
                    for x in range(x0, x1):
                        diff = a[y, x] - b[y + dy, x + dx]
                        ssd += diff * diff
                if ssd < best:
                    best = ssd
                    bu = dx
                    bv = dy
            for y in range(y0, y1):
                for x in range(x0, x1):
                    flow[y, x, 0] = bu
                    flow[y, x, 1] = bv
    return flow


def block_match(gray_a: np.ndarray, gray_b: np.ndarray, block: int, radius: int) -> np.ndarray:
    disps = displacement_ring(radius)
    a = np.ascontiguousarray(gray_a, dtype=np.int64)
    b = np.ascontiguousarray(gray_b, dtype=np.int64)
    return _block_match_impl(a, b, block, radius, disps)
