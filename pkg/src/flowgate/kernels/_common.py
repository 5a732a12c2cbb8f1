"""Shared pieces of the kernel backends."""

import numpy as np


def displacement_ring(radius: int) -> np.ndarray:
    """All integer displacements within +-radius as an (K, 2) array of (dy, dx).

    Ordered by squared magnitude, then by row-major scan position of the
    displacement grid. Both backends enumerate candidates in this order and
    keep the first strict minimum, which fixes the tie-break contract:
    smallest displacement magnitude first, then scan order.
    """
    side = 2 * radius + 1
    dy, dx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    dy = dy.ravel()
    dx = dx.ravel()
    scan = np.arange(side * side)
    order = np.lexsort((scan, dy * dy + dx * dx))
    return np.stack([dy[order], dx[order]], axis=1).astype(np.int64)
