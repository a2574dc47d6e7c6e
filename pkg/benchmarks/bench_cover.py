"""Compare the compiled ball-stamping kernel against the numpy fallback.

Run:  python3 benchmarks/bench_cover.py
"""

import time

import numpy as np

from fracperc import _cover_py, kernels


def _axes(dims, h):
    return [np.arange(n) * h + 0.5 * h for n in dims]


def _workload(rng, dims, n_shapes, r_lo, r_hi):
    d = len(dims)
    span = dims[0] * (1.0 / dims[0])
    centers = rng.uniform(-0.1 * span, 1.1 * span, (n_shapes, d))
    radii = rng.uniform(r_lo, r_hi, n_shapes)
    return centers, radii


def bench(fn, covered, axes, centers, radii, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        covered[...] = False
        t0 = time.perf_counter()
        fn(covered, axes, centers, radii)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(12345)
    cases = [
        ((512, 512), 200, 0.01, 0.08),
        ((1024, 1024), 1000, 0.005, 0.05),
        ((4000, 4000), 5000, 0.002, 0.02),
        ((96, 96, 96), 400, 0.02, 0.12),
    ]
    if not kernels.HAVE_COMPILED:
        print("compiled kernel unavailable; benchmarking fallback only")
    print(f"{'grid':>16} {'shapes':>7} {'pure (ms)':>10} {'compiled (ms)':>14} {'speedup':>8}")
    for dims, n_shapes, r_lo, r_hi in cases:
        h = 1.0 / dims[0]
        axes = _axes(dims, h)
        centers, radii = _workload(rng, dims, n_shapes, r_lo, r_hi)
        covered = np.zeros(dims, dtype=bool)
        t_pure = bench(_cover_py.cover_balls, covered, axes, centers, radii)
        row = f"{str(dims):>16} {n_shapes:>7} {t_pure * 1e3:>10.2f}"
        if kernels.HAVE_COMPILED and len(dims) in (2, 3):
            ref = covered.copy()
            t_fast = bench(kernels.cover_balls, covered, axes, centers, radii)
            assert (covered == ref).all(), "kernels disagree"
            row += f" {t_fast * 1e3:>14.2f} {t_pure / t_fast:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
