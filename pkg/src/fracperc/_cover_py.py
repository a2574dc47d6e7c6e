"""Pure-numpy coverage stamping.

Mirror of the compiled kernel in _cover.pyx: a grid cell is covered when its
center lies in the closed shape.  The distance predicate is evaluated in the
same order as the C loop ((dx*dx + dy*dy) + dz*dz against r*r), so both
implementations produce bit-identical grids.
"""

from __future__ import annotations

import numpy as np


def _index_window(axis: np.ndarray, lo: float, hi: float) -> tuple[int, int]:
    # cells whose center coordinate lies in [lo, hi]
    return (int(np.searchsorted(axis, lo, side="left")),
            int(np.searchsorted(axis, hi, side="right")))


def cover_balls(covered: np.ndarray, axes, centers: np.ndarray, radii: np.ndarray) -> None:
    d = len(axes)
    for c, r in zip(centers, radii):
        windows = []
        empty = False
        for ax in range(d):
            i0, i1 = _index_window(axes[ax], c[ax] - r, c[ax] + r)
            if i0 >= i1:
                empty = True
                break
            windows.append((i0, i1))
        if empty:
            continue
        dist2 = np.zeros((1,) * d)
        for ax in range(d):
            i0, i1 = windows[ax]
            dx = axes[ax][i0:i1] - c[ax]
            shape = [1] * d
            shape[ax] = i1 - i0
            dist2 = dist2 + (dx * dx).reshape(shape)
        sl = tuple(slice(i0, i1) for i0, i1 in windows)
        covered[sl] |= dist2 <= r * r


def cover_cubes(covered: np.ndarray, axes, centers: np.ndarray, halves: np.ndarray) -> None:
    # a cube covers exactly a rectangular index block: slice-assign it
    d = len(axes)
    for c, hs in zip(centers, halves):
        sl = []
        empty = False
        for ax in range(d):
            i0, i1 = _index_window(axes[ax], c[ax] - hs, c[ax] + hs)
            if i0 >= i1:
                empty = True
                break
            sl.append(slice(i0, i1))
        if not empty:
            covered[tuple(sl)] = True
