#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--size 256] [--frames 24]
Imports both backends directly, so FLOWGATE_KERNELS is irrelevant here.
"""

import argparse
import time

import numpy as np

from flowgate.flowkit import grayscale
from flowgate.kernels import _numba, _numpy


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up (JIT compile for the numba path)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--frames", type=int, default=24)
    parser.add_argument("--block", type=int, default=8)
    parser.add_argument("--radius", type=int, default=6)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    a = rng.integers(0, 256, (args.size, args.size, 3)).astype(np.uint8)
    b = np.roll(a, (3, -2), axis=(0, 1))
    ga, gb = grayscale(a), grayscale(b)
    frames = np.ascontiguousarray(
        rng.integers(0, 256, (args.frames, args.size, args.size, 3)).astype(np.uint8))

    rows = []
    t_np = timeit(_numpy.block_match, ga, gb, args.block, args.radius)
    t_nb = timeit(_numba.block_match, ga, gb, args.block, args.radius)
    assert np.array_equal(_numpy.block_match(ga, gb, args.block, args.radius),
                          _numba.block_match(ga, gb, args.block, args.radius))
    rows.append(("block_match "
                 f"{args.size}x{args.size} r={args.radius}", t_np, t_nb))

    t_np = timeit(_numpy.hsv_diff_pairs, frames)
    t_nb = timeit(_numba.hsv_diff_pairs, frames)
    rows.append((f"hsv_diff_pairs {args.frames}x{args.size}x{args.size}",
                 t_np, t_nb))

    print(f"{'kernel':<38}{'numpy':>10}{'numba':>10}{'speedup':>9}")
    for name, t_np, t_nb in rows:
        print(f"{name:<38}{t_np * 1e3:>8.1f}ms{t_nb * 1e3:>8.1f}ms"
              f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
