"""Coverage kernel selection.

Prefers the compiled extension (fracperc._cover) for ball stamping in d = 2
and 3 and falls back to the numpy implementation otherwise, or when the
extension is missing, or when FRACPERC_PURE is set in the environment.  Both
paths produce bit-identical grids.  Cube stamping is a rectangular slice
fill, which numpy already does at memory speed, so it has no compiled twin.
"""

from __future__ import annotations

import os

import numpy as np

from . import _cover_py

try:
    from . import _cover as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None

if os.environ.get("FRACPERC_PURE"):
    _compiled = None

HAVE_COMPILED = _compiled is not None


def cover_balls(covered: np.ndarray, axes, centers: np.ndarray, radii: np.ndarray) -> None:
    """Mark cells whose centers lie in any of the closed balls."""
    n = centers.shape[0]
    if n == 0:
        return
    if _compiled is not None and covered.ndim in (2, 3):
        view = covered.view(np.uint8)
        c = np.ascontiguousarray(centers, dtype=np.float64)
        r = np.ascontiguousarray(radii, dtype=np.float64)
        if covered.ndim == 2:
            _compiled.cover_balls_2d(view, axes[0], axes[1], c, r)
        else:
            _compiled.cover_balls_3d(view, axes[0], axes[1], axes[2], c, r)
        return
    _cover_py.cover_balls(covered, axes, centers, radii)


def cover_cubes(covered: np.ndarray, axes, centers: np.ndarray, halves: np.ndarray) -> None:
    """Mark cells whose centers lie in any of the closed cubes."""
    if centers.shape[0]:
        _cover_py.cover_cubes(covered, axes, centers, halves)
