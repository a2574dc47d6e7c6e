"""Rasterization of shape sets and crossing detectors on the complement.

A grid covers a window with cubic cells of side h; a cell is covered when
its center lies in some closed shape (center-in-shape coverage, an unbiased
O(h) surrogate that is monotone in the shape set).  Detectors work on the
complement (vacant) cells:

* ``crosses_shell``: a vacant component inside a cubic shell touches both
  the inner and the outer boundary.
* ``crosses_box``: a vacant component joins the two faces of a box
  orthogonal to an axis.
* ``has_circuit``: sufficient condition for a vacant circuit in a planar
  shell: one vacant component crosses each of the four overlapping frame
  rectangles the long way.
* ``largest_component_diameter``: max Euclidean diameter over vacant
  components, measured between cell centers.

Cells participate in an event region when their center lies in the closed
region; "touching" a boundary means the center is within h/2 of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from . import kernels
from .errors import (
    BadAxis,
    BoxOutsideGrid,
    DimensionNot2,
    ResolutionTooCoarse,
    ShellOutsideGrid,
)
from .geometry import Box, ShapeKind, SimpleShell
from .soup import ShapeSet

_SLACK = 1e-9


class Adjacency(Enum):
    FACE = "face"
    VERTEX = "vertex"


def structure(dim: int, adj: Adjacency) -> np.ndarray:
    """Neighborhood footprint for labeling: faces only, or all of {-1,0,1}^d."""
    return ndimage.generate_binary_structure(dim, 1 if adj is Adjacency.FACE else dim)


@dataclass(frozen=True)
class Grid:
    """Uniform raster of a window; covered[i0, ..., ik] indexes cells whose
    center is origin + (i + 1/2) h componentwise."""

    origin: tuple[float, ...]
    h: float
    dims: tuple[int, ...]
    covered: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.dims)

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.dims[axis]) + 0.5) * self.h

    def window(self) -> Box:
        return Box(self.origin,
                   tuple(o + n * self.h for o, n in zip(self.origin, self.dims)))


@dataclass(frozen=True)
class ComponentLabels:
    """Vacant-component labels: -1 on covered cells, else component ids
    0..count-1 ordered by each component's first cell in row-major order."""

    labels: np.ndarray
    count: int


def grid_dims(window: Box, h: float) -> tuple[int, ...]:
    """Cells per axis: ceil(side / h), robust to float noise when the side
    is an exact multiple of h."""
    dims = []
    for side in window.sides():
        q = side / h
        r = round(q)
        dims.append(int(r) if abs(q - r) <= _SLACK * max(1.0, q) else int(math.ceil(q)))
    return tuple(dims)


def _axes_for(window: Box, dims: tuple[int, ...], h: float) -> list[np.ndarray]:
    return [window.lo[i] + (np.arange(dims[i]) + 0.5) * h for i in range(window.dim)]


def rasterize(shapes: ShapeSet, window: Box, h: float) -> Grid:
    """Center-in-shape coverage of the window at resolution h.

    Requires h <= dia_min / 4 when the set records its sampling spec, so
    every shape spans at least a few cells.
    """
    if h <= 0:
        raise ValueError("cell size must be positive")
    if shapes.spec is not None and h > shapes.spec.dia_min / 4.0:
        raise ResolutionTooCoarse(
            f"h={h} exceeds dia_min/4 = {shapes.spec.dia_min / 4.0}")
    if window.dim != shapes.dim:
        raise ValueError("window dimension mismatch")
    acc = CoverageAccumulator(shapes.kind, window, h)
    acc.add(shapes.centers, shapes.scales)
    acc.covered.setflags(write=False)
    return acc.grid()


class CoverageAccumulator:
    """Mutable coverage union of one shape kind over a fixed grid.

    Coupled sweeps add nested batches of shapes and read the grid after
    each batch; the union after k batches is bit-identical to rasterizing
    the concatenated batches at once.
    """

    def __init__(self, kind: ShapeKind, window: Box, h: float):
        if h <= 0:
            raise ValueError("cell size must be positive")
        self.kind = kind
        self.window = window
        self.h = h
        self.dims = grid_dims(window, h)
        self.axes = _axes_for(window, self.dims, h)
        self.covered = np.zeros(self.dims, dtype=bool)

    def add(self, centers: np.ndarray, scales: np.ndarray) -> None:
        if self.kind is ShapeKind.BALL:
            kernels.cover_balls(self.covered, self.axes, centers, scales)
        else:
            kernels.cover_cubes(self.covered, self.axes, centers, scales)

    def grid(self) -> Grid:
        return Grid(origin=self.window.lo, h=self.h, dims=self.dims,
                    covered=self.covered)


def grid_from_mask(window: Box, covered: np.ndarray) -> Grid:
    """Wrap an explicit coverage mask (fixtures, incremental sweeps)."""
    covered = np.asarray(covered, dtype=bool)
    h = (window.hi[0] - window.lo[0]) / covered.shape[0]
    return Grid(origin=window.lo, h=h, dims=covered.shape, covered=covered)


def canonical_labels(raw: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel scipy's output so ids follow first occurrence in row-major
    order; cells outside the mask get -1."""
    flat = raw.ravel()
    vals, first = np.unique(flat, return_index=True)
    keep = vals != 0
    vals, first = vals[keep], first[keep]
    order = np.argsort(first, kind="stable")
    remap = np.full(int(raw.max()) + 1, -1, dtype=np.int64)
    remap[vals[order]] = np.arange(len(vals))
    labels = np.where(mask, remap[raw], -1)
    return labels, len(vals)


def complement_components(grid: Grid, adj: Adjacency = Adjacency.FACE) -> ComponentLabels:
    mask = ~grid.covered
    raw, _ = ndimage.label(mask, structure=structure(grid.dim, adj))
    labels, count = canonical_labels(raw, mask)
    return ComponentLabels(labels=labels, count=count)


# --- region helpers (vectorized over a subgrid) ----------------------------

def _half(grid: Grid) -> float:
    # cell half-width with a hair of slack so exactly touching cubes count
    return 0.5 * grid.h * (1.0 + _SLACK)


def _bounding_slices(grid: Grid, box: Box) -> tuple[slice, ...]:
    """Index ranges of the cells whose cube can meet the box."""
    half = _half(grid)
    sl = []
    for ax in range(grid.dim):
        centers = grid.axis_centers(ax)
        i0 = int(np.searchsorted(centers, box.lo[ax] - half, side="left"))
        i1 = int(np.searchsorted(centers, box.hi[ax] + half, side="right"))
        sl.append(slice(i0, i1))
    return tuple(sl)


def _axis_broadcast(values: np.ndarray, axis: int, dim: int) -> np.ndarray:
    shape = [1] * dim
    shape[axis] = len(values)
    return values.reshape(shape)


def _signed_excess(axes_sub, box: Box) -> np.ndarray:
    """Per-cell max over axes of max(lo - x, x - hi); negative inside the
    box.  The cell's h-cube meets the closed box iff this is <= h/2, lies
    strictly inside the open box iff < -h/2, and touches the boundary iff
    the absolute value is <= h/2.  Exact for axis-aligned boxes."""
    d = len(axes_sub)
    out = None
    for ax in range(d):
        q = _axis_broadcast(np.maximum(box.lo[ax] - axes_sub[ax],
                                       axes_sub[ax] - box.hi[ax]), ax, d)
        out = q if out is None else np.maximum(out, q)
    return out


def _require_box_in_window(grid: Grid, box: Box, err) -> None:
    win = grid.window()
    tol = _SLACK * max(1.0, max(abs(v) for v in (*win.lo, *win.hi)))
    ok = all(bl >= wl - tol and bh <= wh + tol
             for bl, bh, wl, wh in zip(box.lo, box.hi, win.lo, win.hi))
    if not ok:
        raise err(f"{box} not contained in grid window {win}")


def crosses_shell(grid: Grid, shell: SimpleShell, adj: Adjacency = Adjacency.FACE) -> bool:
    """True when a vacant component within the shell touches both the inner
    and the outer boundary.

    Cells stand for their h-cubes: a cell participates when its cube meets
    the closed outer box and does not lie strictly inside the open inner
    cube, and a component touches a boundary when one of its cubes does.
    This keeps the test alignment-robust; deciding by cell centers can
    leave entire boundary rings unrepresented at unlucky h.
    """
    if shell.dim != grid.dim:
        raise ValueError("shell dimension mismatch")
    _require_box_in_window(grid, shell.outer, ShellOutsideGrid)
    sl = _bounding_slices(grid, shell.outer)
    axes_sub = [grid.axis_centers(ax)[sl[ax]] for ax in range(grid.dim)]
    if any(a.size == 0 for a in axes_sub):
        return False
    half = _half(grid)
    m_out = _signed_excess(axes_sub, shell.outer)
    m_in = _signed_excess(axes_sub, shell.inner)
    part = (~grid.covered[sl]) & (m_out <= half) & (m_in >= -half)
    if not part.any():
        return False
    labels, _ = ndimage.label(part, structure=structure(grid.dim, adj))
    ids_inner = np.unique(labels[part & (np.abs(m_in) <= half)])
    ids_outer = np.unique(labels[part & (np.abs(m_out) <= half)])
    return bool(np.intersect1d(ids_inner, ids_outer).size > 0)


def crosses_box(grid: Grid, box: Box, axis: int, adj: Adjacency = Adjacency.FACE) -> bool:
    """True when a vacant component inside the closed box joins its two
    faces orthogonal to `axis`."""
    if box.dim != grid.dim:
        raise ValueError("box dimension mismatch")
    if not (0 <= axis < grid.dim):
        raise BadAxis(f"axis {axis} out of range for dimension {grid.dim}")
    _require_box_in_window(grid, box, BoxOutsideGrid)
    sl = _bounding_slices(grid, box)
    axes_sub = [grid.axis_centers(ax)[sl[ax]] for ax in range(grid.dim)]
    if any(a.size == 0 for a in axes_sub):
        return False
    half = _half(grid)
    part = (~grid.covered[sl]) & (_signed_excess(axes_sub, box) <= half)
    if not part.any():
        return False
    labels, _ = ndimage.label(part, structure=structure(grid.dim, adj))
    x = _axis_broadcast(axes_sub[axis], axis, grid.dim)
    near_lo = np.abs(x - box.lo[axis]) <= half
    near_hi = np.abs(x - box.hi[axis]) <= half
    ids_lo = np.unique(labels[part & near_lo])
    ids_hi = np.unique(labels[part & near_hi])
    return bool(np.intersect1d(ids_lo, ids_hi).size > 0)


def has_circuit(grid: Grid, shell: SimpleShell, adj: Adjacency = Adjacency.FACE) -> bool:
    """Sufficient condition for a vacant circuit around the inner cube of a
    planar shell: some single vacant component crosses each of the four
    overlapping frame rectangles the long way.  Conservative: a genuine
    circuit that avoids one rectangle's full span is not detected.
    """
    if grid.dim != 2:
        raise DimensionNot2("circuits are only defined on planar grids")
    if shell.dim != 2:
        raise ValueError("shell dimension mismatch")
    _require_box_in_window(grid, shell.outer, ShellOutsideGrid)
    (ox0, oy0), (ox1, oy1) = shell.outer.lo, shell.outer.hi
    (ix0, iy0), (ix1, iy1) = shell.inner.lo, shell.inner.hi
    rects = [
        (Box((ox0, oy0), (ix0, oy1)), 1),   # left leg, crossed vertically
        (Box((ix1, oy0), (ox1, oy1)), 1),   # right leg
        (Box((ox0, oy0), (ox1, iy0)), 0),   # bottom leg, crossed horizontally
        (Box((ox0, iy1), (ox1, oy1)), 0),   # top leg
    ]

    sl = _bounding_slices(grid, shell.outer)
    axes_sub = [grid.axis_centers(ax)[sl[ax]] for ax in range(2)]
    if any(a.size == 0 for a in axes_sub):
        return False
    vacant = ~grid.covered[sl]
    half = _half(grid)
    ambient_part = vacant & (_signed_excess(axes_sub, shell.outer) <= half)
    if not ambient_part.any():
        return False
    st = structure(2, adj)
    ambient_labels, _ = ndimage.label(ambient_part, structure=st)

    common: set[int] | None = None
    for rect, axis in rects:
        part = vacant & (_signed_excess(axes_sub, rect) <= half)
        if not part.any():
            return False
        labels, _ = ndimage.label(part, structure=st)
        x = _axis_broadcast(axes_sub[axis], axis, 2)
        ids_lo = np.unique(labels[part & (np.abs(x - rect.lo[axis]) <= half)])
        ids_hi = np.unique(labels[part & (np.abs(x - rect.hi[axis]) <= half)])
        qual = np.intersect1d(ids_lo, ids_hi)
        qual = qual[qual > 0]
        if qual.size == 0:
            return False
        sel = np.isin(labels, qual) & part
        ambient_ids = set(np.unique(ambient_labels[sel]).tolist())
        common = ambient_ids if common is None else (common & ambient_ids)
        if not common:
            return False
    return bool(common)


def point_set_diameter(pts: np.ndarray) -> float:
    """Exact Euclidean diameter of a finite point set.

    Large sets are reduced to their convex hull vertices first; degenerate
    (affinely low-rank) sets are projected onto their span so the hull is
    well posed.
    """
    pts = np.asarray(pts, dtype=np.float64)
    n = pts.shape[0]
    if n < 2:
        return 0.0
    if n > 32:
        center = pts.mean(axis=0)
        rel = pts - center
        _, s, vt = np.linalg.svd(rel, full_matrices=False)
        rank = int((s > max(s[0], 1e-300) * 1e-9).sum())
        if rank <= 1:
            proj = rel @ vt[0]
            return float(proj.max() - proj.min())
        proj = rel @ vt[:rank].T
        try:
            hull = ConvexHull(proj)
            pts = proj[hull.vertices]
        except QhullError:
            pts = proj
    if pts.shape[0] > 2:
        return float(pdist(pts).max())
    return float(np.linalg.norm(pts[1] - pts[0]))


def max_component_diameter(mask: np.ndarray, axes, adj: Adjacency) -> float:
    """Largest component diameter of a cell mask, measured between cell
    centers; 0 when the mask is empty."""
    dim = mask.ndim
    raw, count = ndimage.label(mask, structure=structure(dim, adj))
    if count == 0:
        return 0.0
    best = 0.0
    for idx, sl in enumerate(ndimage.find_objects(raw), start=1):
        if sl is None:
            continue
        # bounding-box diagonal bounds the component diameter from above
        ubound2 = 0.0
        for ax in range(dim):
            span = axes[ax][sl[ax].stop - 1] - axes[ax][sl[ax].start]
            ubound2 += span * span
        if math.sqrt(ubound2) <= best:
            continue
        cells = np.argwhere(raw[sl] == idx)
        coords = np.column_stack([
            axes[ax][sl[ax].start + cells[:, ax]] for ax in range(dim)
        ])
        best = max(best, point_set_diameter(coords))
    return best


def largest_component_diameter(grid: Grid, adj: Adjacency = Adjacency.FACE) -> float:
    axes = [grid.axis_centers(ax) for ax in range(grid.dim)]
    return max_component_diameter(~grid.covered, axes, adj)


def to_p1_text(grid: Grid) -> str:
    """Plain-text bitmap (PBM P1) of a planar grid, covered cells as 1.
    Rows run from the top of the window down, matching image conventions."""
    if grid.dim != 2:
        raise DimensionNot2("text bitmaps are only defined for planar grids")
    w, hgt = grid.dims
    lines = [f"P1", f"{w} {hgt}"]
    cov = grid.covered
    for j in range(hgt - 1, -1, -1):
        lines.append(" ".join("1" if cov[i, j] else "0" for i in range(w)))
    return "\n".join(lines) + "\n"
