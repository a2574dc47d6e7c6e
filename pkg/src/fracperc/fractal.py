"""Mandelbrot fractal percolation on [0,1]^d.

The unit cube is split into N^d closed subcubes; each survives independently
with probability p, and the construction recurses inside the survivors.
``RetainedSet.level(k)`` is the union of retained depth-k cells as a boolean
occupancy array.

Each cell draws one uniform from a counter-based stream addressed by
(seed, tile, depth, cell index), so realizations at different p from the
same seed share their uniforms: retained sets are nondecreasing in p and
nested in depth, per realization, exactly.

The canonical shell event lives between the open unit cube and the closed
cube [1/3, 2/3]^d.  Retained cells are clipped against the shell
geometrically: cell lattices need not align with thirds, so participation,
boundary contact and cell-to-cell contact are decided in exact integer
arithmetic on the rational bounds.  An optional corner-anchored variant
places the inner cube at (1/2,...,1/2) + [0,1/3]^d instead.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import BadAxis, TooLarge
from .raster import Adjacency, structure
from .rng import Stream

_TAG_FRACTAL = 0x46
_TAG_COUPLING_Q = 0x51
_MAX_CELLS = 1 << 28

# inner cube bounds as exact rationals
_CENTERED_INNER = (Fraction(1, 3), Fraction(2, 3))
_CORNER_INNER = (Fraction(1, 2), Fraction(5, 6))


@dataclass(frozen=True)
class FractalSpec:
    N: int
    dim: int
    p: float
    depth: int
    seed: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("subdivision N must be >= 2")
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("retention probability must lie in [0, 1]")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")

    def to_dict(self) -> dict:
        return {"N": self.N, "dim": self.dim, "p": self.p,
                "depth": self.depth, "seed": self.seed}

    @staticmethod
    def from_dict(d: dict) -> "FractalSpec":
        return FractalSpec(N=int(d["N"]), dim=int(d["dim"]), p=float(d["p"]),
                           depth=int(d["depth"]), seed=int(d["seed"]))


@dataclass(frozen=True)
class RetainedSet:
    """Retained cells per depth.  levels[j] is a boolean array of shape
    (copies_i * N^(j+1),)_i: depth j+1 cells over a block of unit-cube tiles
    (a single tile unless built by tile_full_space)."""

    spec: FractalSpec
    levels: tuple[np.ndarray, ...]
    copies: tuple[int, ...]

    def level(self, k: int | None = None) -> np.ndarray:
        k = self.spec.depth if k is None else k
        if not (1 <= k <= self.spec.depth):
            raise ValueError(f"depth {k} outside 1..{self.spec.depth}")
        return self.levels[k - 1]

    def axis_centers(self, k: int | None = None) -> list[np.ndarray]:
        """Cell center coordinates per axis, in units of the tile side."""
        k = self.spec.depth if k is None else k
        m = self.spec.N ** k
        return [(np.arange(c * m) + 0.5) / m for c in self.copies]


def _children_flat(parents_flat: np.ndarray, N: int,
                   dims_parent: tuple[int, ...]) -> np.ndarray:
    """Row-major indices of all N^d children of the given parent cells."""
    d = len(dims_parent)
    coords = np.column_stack(np.unravel_index(parents_flat, dims_parent))
    offsets = np.array(list(product(range(N), repeat=d)), dtype=np.int64)
    child = coords[:, None, :] * N + offsets[None, :, :]
    dims_child = tuple(n * N for n in dims_parent)
    return np.ravel_multi_index(tuple(child.reshape(-1, d).T), dims_child)


def _sample_levels(spec: FractalSpec, stream: Stream) -> tuple[np.ndarray, ...]:
    """Levels of a single tile; discarded subtrees are never expanded."""
    d = spec.dim
    if spec.N ** (spec.depth * d) > _MAX_CELLS:
        raise TooLarge("retained set would exceed the cell budget")
    levels = []
    parents_flat: np.ndarray | None = None
    dims: tuple[int, ...] = (1,) * d
    for depth in range(1, spec.depth + 1):
        dims_child = tuple(n * spec.N for n in dims)
        if depth == 1:
            cand = np.arange(spec.N ** d, dtype=np.int64)
        else:
            cand = _children_flat(parents_flat, spec.N, dims)
        u = stream.child(depth).uniforms_at(cand)
        kept = cand[u < spec.p]
        arr = np.zeros(math.prod(dims_child), dtype=bool)
        arr[kept] = True
        arr = arr.reshape(dims_child)
        arr.setflags(write=False)
        levels.append(arr)
        parents_flat = kept
        dims = dims_child
    return tuple(levels)


def sample_fractal(spec: FractalSpec, stream: Stream | None = None) -> RetainedSet:
    """Draw one realization.  Deterministic given (spec, stream); the cell
    uniforms do not depend on p, so resampling at another p with the same
    stream yields a coupled (nested) realization."""
    if stream is None:
        stream = Stream(spec.seed, _TAG_FRACTAL, 0)
    copies = (1,) * spec.dim
    return RetainedSet(spec, _sample_levels(spec, stream.child(0)), copies)


def tile_full_space(spec: FractalSpec, copies: tuple[int, ...],
                    stream: Stream | None = None) -> RetainedSet:
    """Independent copies of the construction on a block of unit cubes,
    stitched into one occupancy array per depth.  Tile (0, ..., 0) uses the
    same substream as sample_fractal, so it reproduces that realization."""
    copies = tuple(int(c) for c in copies)
    if len(copies) != spec.dim or any(c < 1 for c in copies):
        raise ValueError("copies must give a positive count per axis")
    if stream is None:
        stream = Stream(spec.seed, _TAG_FRACTAL, 0)
    per_tile = {}
    for t_flat, t in enumerate(product(*(range(c) for c in copies))):
        per_tile[t] = _sample_levels(spec, stream.child(t_flat))

    levels = []
    for j in range(spec.depth):
        m = spec.N ** (j + 1)
        big = np.zeros(tuple(c * m for c in copies), dtype=bool)
        for t, tl in per_tile.items():
            sl = tuple(slice(ti * m, (ti + 1) * m) for ti in t)
            big[sl] = tl[j]
        big.setflags(write=False)
        levels.append(big)
    return RetainedSet(spec, tuple(levels), copies)


def fractal_crossing(rset: RetainedSet, axis: int = 0,
                     adj: Adjacency = Adjacency.VERTEX,
                     level: int | None = None) -> bool:
    """True when retained depth-k cells connect the two opposite faces of
    the block along `axis` under the given adjacency."""
    mask = rset.level(level)
    if not (0 <= axis < rset.spec.dim):
        raise BadAxis(f"axis {axis} out of range")
    if not mask.any():
        return False
    labels, _ = ndimage.label(mask, structure=structure(mask.ndim, adj))
    lo = np.take(labels, 0, axis=axis).ravel()
    hi = np.take(labels, -1, axis=axis).ravel()
    ids = np.intersect1d(lo[lo > 0], hi[hi > 0])
    return bool(ids.size > 0)


def _inner_bounds(corner_anchored: bool) -> tuple[Fraction, Fraction]:
    return _CORNER_INNER if corner_anchored else _CENTERED_INNER


def _offsets(adj: Adjacency, d: int) -> list[tuple[int, ...]]:
    # canonical half of the neighbor offsets (first nonzero entry positive)
    if adj is Adjacency.FACE:
        out = []
        for ax in range(d):
            o = [0] * d
            o[ax] = 1
            out.append(tuple(o))
        return out
    out = []
    for o in product((-1, 0, 1), repeat=d):
        nz = next((v for v in o if v != 0), 0)
        if nz == 1:
            out.append(o)
    return out


def fractal_shell_crossing(rset: RetainedSet, adj: Adjacency = Adjacency.VERTEX,
                           level: int | None = None,
                           corner_anchored: bool = False) -> bool:
    """Crossing of the canonical shell by retained depth-k cells.

    A component of the retained set clipped to the closed shell must touch
    both the boundary of the unit cube and the boundary of the inner cube.
    Cells and cell contacts that fall strictly inside the open inner cube
    are cut; the tests run on integer multiples of the rational bounds, so
    lattice-vs-thirds alignment never relies on float rounding.
    """
    if rset.copies != (1,) * rset.spec.dim:
        raise ValueError("shell crossing is defined on a single tile")
    mask = rset.level(level)
    d = mask.ndim
    m = mask.shape[0]
    lo, hi = _inner_bounds(corner_anchored)

    j = np.arange(m)
    # interval [j, j+1]/m strictly inside (lo, hi)
    in_interval = (j * lo.denominator > m * lo.numerator) \
        & ((j + 1) * hi.denominator < m * hi.numerator)
    # point v/m strictly inside (lo, hi), v = 0..m
    v = np.arange(m + 1)
    in_point = (v * lo.denominator > m * lo.numerator) \
        & (v * hi.denominator < m * hi.numerator)
    # interval [j, j+1]/m meets the closed inner cube
    meets_inner = (j * hi.denominator <= m * hi.numerator) \
        & ((j + 1) * lo.denominator >= m * lo.numerator)

    def _per_axis_and(vectors) -> np.ndarray:
        out = None
        for ax, vec in enumerate(vectors):
            shape = [1] * d
            shape[ax] = len(vec)
            piece = vec.reshape(shape)
            out = piece if out is None else (out & piece)
        return out

    strictly_inside = _per_axis_and([in_interval] * d)
    cand = mask & ~strictly_inside
    if not cand.any():
        return False

    flat_cand = np.flatnonzero(cand)
    node_of = np.full(mask.size, -1, dtype=np.int64)
    node_of[flat_cand] = np.arange(flat_cand.size)
    strides = np.array([int(np.prod(mask.shape[ax + 1:], dtype=np.int64))
                        for ax in range(d)], dtype=np.int64)

    rows, cols = [], []
    full_index = np.indices(mask.shape).reshape(d, -1)
    for off in _offsets(adj, d):
        a_sl, b_sl, edge_vecs = [], [], []
        for ax, o in enumerate(off):
            if o == 1:
                a_sl.append(slice(0, m - 1))
                b_sl.append(slice(1, m))
                edge_vecs.append(in_point[1:m])
            elif o == -1:
                a_sl.append(slice(1, m))
                b_sl.append(slice(0, m - 1))
                edge_vecs.append(in_point[1:m])
            else:
                a_sl.append(slice(0, m))
                b_sl.append(slice(0, m))
                edge_vecs.append(in_interval)
        a_sl, b_sl = tuple(a_sl), tuple(b_sl)
        pair = cand[a_sl] & cand[b_sl]
        if not pair.any():
            continue
        valid = pair & ~_per_axis_and(edge_vecs)
        if not valid.any():
            continue
        where = np.argwhere(valid)
        a_idx = where + np.array([sl.start for sl in a_sl])
        b_idx = a_idx + np.array(off)
        a_flat = a_idx @ strides
        b_flat = b_idx @ strides
        rows.append(node_of[a_flat])
        cols.append(node_of[b_flat])

    n_nodes = flat_cand.size
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        graph = coo_matrix((np.ones(r.size, dtype=np.int8), (r, c)),
                           shape=(n_nodes, n_nodes))
        _, comp = connected_components(graph, directed=False)
    else:
        comp = np.arange(n_nodes)

    coords = full_index[:, flat_cand]
    touches_outer = np.zeros(n_nodes, dtype=bool)
    touches_inner = np.ones(n_nodes, dtype=bool)
    for ax in range(d):
        jx = coords[ax]
        touches_outer |= (jx == 0) | (jx == m - 1)
        touches_inner &= meets_inner[jx]
    ids_outer = np.unique(comp[touches_outer])
    ids_inner = np.unique(comp[touches_inner])
    return bool(np.intersect1d(ids_outer, ids_inner).size > 0)


def retained_component_diameter(rset: RetainedSet, adj: Adjacency = Adjacency.VERTEX,
                                level: int | None = None) -> float:
    """Largest Euclidean diameter over retained components, between cell
    centers, in units of the tile side."""
    from .raster import max_component_diameter
    mask = rset.level(level)
    return max_component_diameter(mask, rset.axis_centers(level), adj)


# --- exact enumeration oracle ----------------------------------------------

def _small_crossing(cells: frozenset, shape: tuple[int, ...], axis: int,
                    adj: Adjacency) -> bool:
    if not cells:
        return False
    d = len(shape)
    if adj is Adjacency.FACE:
        deltas = [o for o in product((-1, 0, 1), repeat=d)
                  if sum(map(abs, o)) == 1]
    else:
        deltas = [o for o in product((-1, 0, 1), repeat=d) if any(o)]
    frontier = [c for c in cells if c[axis] == 0]
    seen = set(frontier)
    while frontier:
        cur = frontier.pop()
        if cur[axis] == shape[axis] - 1:
            return True
        for dlt in deltas:
            nxt = tuple(a + b for a, b in zip(cur, dlt))
            if nxt in cells and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return False


def exact_crossing_prob(N: int = 2, dim: int = 2, depth: int = 1,
                        p: float = 0.5, axis: int = 0,
                        adj: Adjacency = Adjacency.VERTEX) -> float:
    """Face-to-face crossing probability of the unit cube at depth k, by
    exhaustive enumeration of retention configurations.

    The result is a polynomial in p with integer coefficients, evaluated in
    floats; enumeration is limited to depth <= 2 and 2^24 configurations.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError("p must lie in [0, 1]")
    nd = N ** dim
    if depth == 1:
        total = 2 ** nd
    elif depth == 2:
        total = (1 + 2 ** nd) ** nd
    else:
        raise TooLarge("exact enumeration supports depth 1 or 2")
    if total > 1 << 24:
        raise TooLarge(f"{total} configurations exceed the enumeration budget")
    if not (0 <= axis < dim):
        raise BadAxis(f"axis {axis} out of range")

    level1 = list(product(range(N), repeat=dim))
    counts: dict[tuple[int, int], int] = {}
    q_cross_cache: dict = {}

    def _crossing(cells: frozenset, side: int) -> bool:
        key = (cells, side)
        if key not in q_cross_cache:
            q_cross_cache[key] = _small_crossing(cells, (side,) * dim, axis, adj)
        return q_cross_cache[key]

    if depth == 1:
        for bits in range(2 ** nd):
            cells = frozenset(c for i, c in enumerate(level1) if bits >> i & 1)
            if _crossing(cells, N):
                r = len(cells)
                key = (r, nd - r)
                counts[key] = counts.get(key, 0) + 1
    else:
        child_cells = {}
        for i, pc in enumerate(level1):
            for bits in range(2 ** nd):
                cset = frozenset(tuple(pc[ax] * N + off[ax] for ax in range(dim))
                                 for k, off in enumerate(level1) if bits >> k & 1)
                child_cells[(i, bits)] = cset
        for bits1 in range(2 ** nd):
            parents = [i for i in range(nd) if bits1 >> i & 1]
            r1 = len(parents)
            for sub in product(range(2 ** nd), repeat=r1):
                cells = frozenset().union(
                    *(child_cells[(i, b)] for i, b in zip(parents, sub))) \
                    if r1 else frozenset()
                r2 = sum(bin(b).count("1") for b in sub)
                if _crossing(cells, N * N):
                    key = (r1 + r2, (nd - r1) + (nd * r1 - r2))
                    counts[key] = counts.get(key, 0) + 1

    q = 1.0 - p
    return float(sum(cnt * p ** pe * q ** qe for (pe, qe), cnt in counts.items()))


def soup_fractal_coupling_q(intensity: float, n: int, seed: int,
                            h: float = 1.0 / 64.0, level: float = 0.95,
                            threads: int = 1):
    """Monte Carlo estimate of q, the probability that the unit square is
    covered by planar soup shapes with diameter in (2/3, 2].

    In the coupling between a soup and fractal percolation on thirds, a
    depth-k square is discarded exactly when soup sets of the matching
    dyadic-in-thirds diameter band cover it; by scale invariance that
    probability is the same q at every depth.  Coverage is evaluated on the
    raster surrogate (every cell center covered).
    """
    from .estimate import Estimate, run_trials
    from .geometry import ShapeKind, unit_box
    from .raster import rasterize
    from .soup import SoupMode, SoupSpec, sample_soup

    spec = SoupSpec(dim=2, intensity=intensity, kind=ShapeKind.BALL,
                    dia_min=2.0 / 3.0, dia_max=2.0, window=unit_box(2),
                    mode=SoupMode.FULL_SPACE_RESTRICTED, seed=seed)

    def trial(i: int) -> bool:
        shapes = sample_soup(spec, Stream(seed, _TAG_COUPLING_Q, i))
        grid = rasterize(shapes, spec.window, h)
        return bool(grid.covered.all())

    hits = run_trials(trial, n, threads)
    return Estimate.from_successes(int(np.sum(hits)), n, level, seed)


# --- serialization ----------------------------------------------------------

def _rle_encode(flat: np.ndarray) -> list[int]:
    """Run lengths of a boolean sequence, alternating and starting with a
    (possibly empty) run of zeros."""
    if flat.size == 0:
        return []
    x = flat.view(np.int8)
    breaks = np.flatnonzero(np.diff(x)) + 1
    bounds = np.concatenate([[0], breaks, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return [int(r) for r in runs]


def _rle_decode(runs: list[int], size: int) -> np.ndarray:
    out = np.zeros(size, dtype=bool)
    pos = 0
    val = False
    for r in runs:
        if val:
            out[pos:pos + r] = True
        pos += r
        val = not val
    if pos != size:
        raise ValueError("run lengths do not match the array size")
    return out


def retained_to_json_obj(rset: RetainedSet) -> dict:
    return {
        "spec": rset.spec.to_dict(),
        "copies": list(rset.copies),
        "levels": [
            {"shape": list(lv.shape), "rle": _rle_encode(lv.ravel())}
            for lv in rset.levels
        ],
    }


def retained_from_json_obj(obj: dict) -> RetainedSet:
    spec = FractalSpec.from_dict(obj["spec"])
    levels = []
    for lv in obj["levels"]:
        shape = tuple(int(s) for s in lv["shape"])
        arr = _rle_decode(lv["rle"], int(np.prod(shape))).reshape(shape)
        arr.setflags(write=False)
        levels.append(arr)
    return RetainedSet(spec, tuple(levels), tuple(int(c) for c in obj["copies"]))
