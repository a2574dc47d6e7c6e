"""Renormalized lattice field built from shrunken shell translates.

A template shell A (outer cube minus inner cube, inner side l) is scaled by
s and translated so the shrunken inner cubes tile a regular lattice with
spacing s*l.  Site x carries the bit X(x) = 1 iff the vacant region of the
soup, kept only at diameters <= s, crosses the translate at x.

The field is stationary, and sites farther apart than
(diam(outer) + 2) / l in lattice units depend on disjoint shape
populations, hence are independent: a shape of diameter <= s reaches at
most s beyond the translate it touches.  ``dependence_range_check``
measures pairwise correlations against that threshold.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InsufficientSamples, WindowTooSmall
from .geometry import SimpleShell, scale_shell, translate_shell
from .raster import Adjacency, crosses_shell, rasterize
from .rng import Stream
from .soup import ShapeSet, SoupMode, SoupSpec, sample_soup

_TAG_FIELD = 0x58
_MIN_FIELDS = 1000


@dataclass(frozen=True)
class RenormSpec:
    """Template shell, shrink factor, lattice extent, and the driving soup.

    The soup must be a full-space one with dia_max <= s, and the window must
    contain every translated outer cube.
    """

    shell: SimpleShell
    s: float
    lattice_extent: tuple[int, ...]
    soup_spec: SoupSpec

    def __post_init__(self):
        object.__setattr__(self, "lattice_extent",
                           tuple(int(e) for e in self.lattice_extent))
        if not (0.0 < self.s < 1.0):
            raise ValueError("shrink factor must lie in (0, 1)")
        if self.shell.dim != self.soup_spec.dim:
            raise ValueError("shell dimension mismatch")
        if len(self.lattice_extent) != self.shell.dim:
            raise ValueError("lattice extent dimension mismatch")
        if any(e < 1 for e in self.lattice_extent):
            raise ValueError("lattice extent entries must be positive")
        if self.soup_spec.mode is not SoupMode.FULL_SPACE_RESTRICTED:
            raise ValueError("the field is defined over a full-space soup")
        if self.soup_spec.dia_max > self.s:
            raise ValueError("soup diameter cutoff must not exceed s")
        win = self.soup_spec.window
        for site in (tuple(0 for _ in self.lattice_extent),
                     tuple(e - 1 for e in self.lattice_extent)):
            outer = self.site_shell(site).outer
            if not win.contains_box(outer):
                raise WindowTooSmall(
                    f"translate at {site} leaves the window: {outer}")

    @property
    def dim(self) -> int:
        return self.shell.dim

    @property
    def spacing(self) -> float:
        """Lattice spacing: s times the template inner side."""
        return self.s * self.shell.inner.side()

    def site_shell(self, site) -> SimpleShell:
        small = scale_shell(self.shell, self.s)
        return translate_shell(small, tuple(self.spacing * k for k in site))

    def sites(self):
        return itertools.product(*(range(e) for e in self.lattice_extent))


def independence_threshold(spec: RenormSpec) -> float:
    """Max-norm lattice distance beyond which two sites are independent.

    (diam(outer) + 2) / l with the Euclidean cube diameter; conservative
    for the max-norm separation actually needed.
    """
    d = spec.dim
    return (spec.shell.outer.side() * math.sqrt(d) + 2.0) / spec.shell.inner.side()


@dataclass(frozen=True)
class XField:
    """One realization of the lattice field; values has shape lattice_extent."""

    values: np.ndarray
    spec: RenormSpec

    def __post_init__(self):
        v = np.asarray(self.values, dtype=bool)
        if v.shape != self.spec.lattice_extent:
            raise ValueError("field shape does not match the lattice extent")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def extract_x_field(sample: ShapeSet, spec: RenormSpec, h: float | None = None,
                    adjacency: Adjacency = Adjacency.FACE) -> XField:
    """Evaluate every site's crossing bit on one shared raster."""
    if sample.dim != spec.dim:
        raise ValueError("sample dimension mismatch")
    if h is None:
        h = spec.soup_spec.dia_min / 4.0
    grid = rasterize(sample, spec.soup_spec.window, h)
    values = np.zeros(spec.lattice_extent, dtype=bool)
    for site in spec.sites():
        values[site] = crosses_shell(grid, spec.site_shell(site), adjacency)
    return XField(values, spec)


def sample_fields(spec: RenormSpec, n: int, seed: int, h: float | None = None,
                  adjacency: Adjacency = Adjacency.FACE,
                  threads: int = 1) -> list[XField]:
    """n independent field draws, one soup realization each."""
    from .estimate import run_trials

    if n < 1:
        raise ValueError("need at least one field")
    root = Stream(seed, _TAG_FIELD)

    def trial(i: int) -> XField:
        shapes = sample_soup(spec.soup_spec, root.child(i))
        return extract_x_field(shapes, spec, h, adjacency)

    return run_trials(trial, n, threads)


def _stack(fields: list[XField]) -> np.ndarray:
    if not fields:
        raise ValueError("no fields given")
    spec = fields[0].spec
    if any(f.spec is not spec and f.spec != spec for f in fields):
        raise ValueError("fields come from different specs")
    return np.stack([f.values for f in fields])


def site_marginals(fields: list[XField]) -> np.ndarray:
    """Empirical P(X = 1) per site, shaped like the lattice."""
    return _stack(fields).mean(axis=0)


@dataclass(frozen=True)
class CorrelationEstimate:
    """Pearson correlation of two binary sites with a Fisher-z interval.

    degenerate means a site had zero variance across the sample, so the
    correlation is undefined; r and the bounds are NaN then.
    """

    r: float
    ci_lo: float
    ci_hi: float
    n: int
    level: float
    degenerate: bool


def _fisher_ci(r: float, n: int, level: float) -> tuple[float, float]:
    if abs(r) >= 1.0:
        return (r, r)
    z = math.atanh(r)
    half = float(stats.norm.ppf(0.5 + level / 2.0)) / math.sqrt(n - 3)
    return (math.tanh(z - half), math.tanh(z + half))


def dependence_range_check(fields: list[XField], x, y,
                           level: float = 0.99) -> CorrelationEstimate:
    """Correlation between the bits at sites x and y across the sample.

    Needs at least 1000 fields.  Beyond independence_threshold(spec) in
    max-norm the true correlation is zero, so the interval should cover 0.
    """
    if len(fields) < _MIN_FIELDS:
        raise InsufficientSamples(
            f"need at least {_MIN_FIELDS} fields, got {len(fields)}")
    cube = _stack(fields)
    a = cube[(slice(None), *tuple(x))].astype(np.float64)
    b = cube[(slice(None), *tuple(y))].astype(np.float64)
    n = len(fields)
    if a.std() == 0.0 or b.std() == 0.0:
        nan = float("nan")
        return CorrelationEstimate(nan, nan, nan, n, level, True)
    r = float(np.corrcoef(a, b)[0, 1])
    lo, hi = _fisher_ci(r, n, level)
    return CorrelationEstimate(r, lo, hi, n, level, False)


def correlations_by_distance(fields: list[XField]) -> dict[int, dict]:
    """Pairwise site correlations grouped by max-norm lattice distance.

    Per distance: mean/min/max correlation over the defined pairs plus pair
    counts; degenerate pairs are counted but excluded from the statistics.
    """
    spec = fields[0].spec
    cube = _stack(fields).reshape(len(fields), -1).astype(np.float64)
    sites = list(spec.sites())
    std = cube.std(axis=0)
    out: dict[int, dict] = {}
    groups: dict[int, list[float]] = {}
    degen: dict[int, int] = {}
    cm = None
    if (std > 0).all():
        cm = np.corrcoef(cube, rowvar=False)
    for i, j in itertools.combinations(range(len(sites)), 2):
        dist = max(abs(a - b) for a, b in zip(sites[i], sites[j]))
        if std[i] == 0.0 or std[j] == 0.0:
            degen[dist] = degen.get(dist, 0) + 1
            groups.setdefault(dist, [])
            continue
        r = float(cm[i, j]) if cm is not None else float(
            np.corrcoef(cube[:, i], cube[:, j])[0, 1])
        groups.setdefault(dist, []).append(r)
    for dist in sorted(groups):
        rs = groups[dist]
        entry = {"n_pairs": len(rs) + degen.get(dist, 0),
                 "degenerate_pairs": degen.get(dist, 0)}
        if rs:
            entry.update(mean_r=float(np.mean(rs)), min_r=float(np.min(rs)),
                         max_r=float(np.max(rs)))
        out[dist] = entry
    return out


def field_summary(fields: list[XField]) -> dict:
    """JSON-ready summary: marginals, correlations by distance, threshold."""
    spec = fields[0].spec
    return {
        "lattice_extent": list(spec.lattice_extent),
        "n_fields": len(fields),
        "site_marginals": site_marginals(fields).tolist(),
        "pairwise_correlations_by_distance": {
            str(k): v for k, v in correlations_by_distance(fields).items()
        },
        "independence_threshold": independence_threshold(spec),
    }


def write_field_csv(fields: list[XField], fp) -> None:
    """Long-form site matrix: one row per (field, site), final column the bit."""
    spec = fields[0].spec
    d = spec.dim
    header = ["field"] + [f"site_{k}" for k in range(d)] + ["x"]
    fp.write(",".join(header) + "\n")
    for t, f in enumerate(fields):
        for site in spec.sites():
            fp.write(f"{t}," + ",".join(str(k) for k in site)
                     + f",{int(f.values[site])}\n")
