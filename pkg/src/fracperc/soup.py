"""Scale-invariant Poisson shape soups.

Shapes (balls or axis-aligned cubes) are thrown by a Poisson process whose
scale parameter r (radius, or half-side for cubes) has density proportional
to r^-(d+1) on a diameter band (dia_min, dia_max].  That density makes the
process scale invariant: multiplying the window and the band by s > 0 leaves
all count statistics unchanged.

Two sampling modes:

* FULL_SPACE_RESTRICTED: the full-space soup restricted to shapes that
  intersect the window.  Centers may fall outside the window.
* CONTAINED_IN_DOMAIN: only shapes entirely contained in the window.

Sampling stratifies the diameter band into dyadic sub-bands.  For each
sub-band the window is inflated by the band's largest scale parameter (the
centers of every shape touching the window lie in that inflation), a Poisson
count is drawn with the closed-form mean, centers are placed uniformly, and
scale parameters come from the inverse CDF.  An exact intersection or
containment test then restores the target law.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BadIntensity, EmptyBand, ResolutionZero, UnboundedMeasure
from .geometry import (
    Box,
    ShapeKind,
    inflate,
    scale_from_diameter,
    shape_inside_box,
    shape_intersects_box,
)
from .rng import Stream

# substream tags
_TAG_SAMPLE = 0x50


class SoupMode(Enum):
    FULL_SPACE_RESTRICTED = "full_space_restricted"
    CONTAINED_IN_DOMAIN = "contained_in_domain"


@dataclass(frozen=True)
class SoupSpec:
    """Parameters of a soup to sample.

    intensity is the multiplier of the scale-invariant measure; 0 gives the
    empty soup.  dia_min > 0 is the resolution cutoff, dia_max the upper
    diameter cutoff.
    """

    dim: int
    intensity: float
    kind: ShapeKind
    dia_min: float
    dia_max: float
    window: Box
    mode: SoupMode
    seed: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if self.window.dim != self.dim:
            raise ValueError("window dimension mismatch")
        if self.intensity < 0:
            raise ValueError("intensity must be nonnegative")
        if not (0 <= self.dia_min < self.dia_max):
            raise ValueError("need 0 <= dia_min < dia_max")

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "lambda": self.intensity,
            "kind": self.kind.value,
            "dia_min": self.dia_min,
            "dia_max": self.dia_max,
            "window_lo": list(self.window.lo),
            "window_hi": list(self.window.hi),
            "mode": self.mode.value,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "SoupSpec":
        return SoupSpec(
            dim=int(d["dim"]),
            intensity=float(d["lambda"]),
            kind=ShapeKind(d["kind"]),
            dia_min=float(d["dia_min"]),
            dia_max=float(d["dia_max"]),
            window=Box(tuple(d["window_lo"]), tuple(d["window_hi"])),
            mode=SoupMode(d["mode"]),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True)
class ShapeSet:
    """A realized collection of shapes of one kind.

    centers has shape (n, dim); scales holds the radius or half-side of each
    shape.  Arrays are read-only.  spec records provenance when the set came
    from a sampler; sets loaded from CSV carry spec=None.
    """

    kind: ShapeKind
    dim: int
    centers: np.ndarray
    scales: np.ndarray
    spec: SoupSpec | None = None

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.centers, dtype=np.float64))
        s = np.ascontiguousarray(np.asarray(self.scales, dtype=np.float64))
        if c.ndim != 2 or c.shape[1] != self.dim:
            c = c.reshape(-1, self.dim)
        if s.shape != (c.shape[0],):
            raise ValueError("scales length mismatch")
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "scales", s)

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    def diameters(self) -> np.ndarray:
        if self.kind is ShapeKind.BALL:
            return 2.0 * self.scales
        return (2.0 * math.sqrt(self.dim)) * self.scales


def empty_shape_set(kind: ShapeKind, dim: int, spec: SoupSpec | None = None) -> ShapeSet:
    return ShapeSet(kind, dim, np.empty((0, dim)), np.empty(0), spec)


def expected_count(spec: SoupSpec, region: Box, dia_lo: float, dia_hi: float) -> float:
    """Mean number of soup shapes with center in `region` and diameter in
    (dia_lo, dia_hi].

    Closed form: intensity * vol(region) * (a^-d - b^-d) / d where a, b are
    the scale-parameter bounds matching the diameter bounds.
    """
    if dia_lo >= dia_hi:
        raise EmptyBand(f"empty diameter band ({dia_lo}, {dia_hi}]")
    if dia_lo <= 0:
        raise UnboundedMeasure("the measure diverges as diameter -> 0")
    d = spec.dim
    a = scale_from_diameter(spec.kind, dia_lo, d)
    b = scale_from_diameter(spec.kind, dia_hi, d)
    return spec.intensity * region.volume() * (a ** -d - b ** -d) / d


def sample_radius(dim: int, r_lo: float, r_hi: float, u) -> np.ndarray | float:
    """Inverse CDF of the r^-(d+1) density truncated to [r_lo, r_hi].

    u = 0 maps to r_lo, u = 1 to r_hi; works elementwise on arrays.
    """
    if not (0 < r_lo < r_hi):
        raise EmptyBand(f"bad scale band [{r_lo}, {r_hi}]")
    a = r_lo ** -dim
    b = r_hi ** -dim
    return (a - np.asarray(u) * (a - b)) ** (-1.0 / dim)


def dyadic_bands(dia_min: float, dia_max: float) -> list[tuple[float, float]]:
    """Partition (dia_min, dia_max] into dyadic diameter sub-bands,
    largest first; the last band is clipped at dia_min."""
    bands = []
    hi = dia_max
    while hi > dia_min:
        lo = max(dia_min, hi / 2.0)
        bands.append((lo, hi))
        hi = lo
    return bands


def sample_soup(spec: SoupSpec, stream: Stream | None = None) -> ShapeSet:
    """Draw one soup realization.

    Deterministic given (spec, stream); the default stream is derived from
    spec.seed.  Each dyadic band uses its own substream, so band draws are
    independent of iteration order and of any worker pool above.
    """
    if spec.dia_min <= 0:
        raise ResolutionZero("dia_min must be positive to sample")
    if stream is None:
        stream = Stream(spec.seed, _TAG_SAMPLE, 0)

    d = spec.dim
    full = spec.mode is SoupMode.FULL_SPACE_RESTRICTED
    centers_parts: list[np.ndarray] = []
    scales_parts: list[np.ndarray] = []

    for band_idx, (dia_lo, dia_hi) in enumerate(dyadic_bands(spec.dia_min, spec.dia_max)):
        a = scale_from_diameter(spec.kind, dia_lo, d)
        b = scale_from_diameter(spec.kind, dia_hi, d)
        region = inflate(spec.window, b) if full else spec.window
        mean = expected_count(spec, region, dia_lo, dia_hi)
        g = stream.child(band_idx).generator()
        count = int(g.poisson(mean))
        if count == 0:
            continue
        lo = np.array(region.lo)
        sides = np.array(region.sides())
        centers = lo + g.random((count, d)) * sides
        # u in (0, 1] keeps diameters in the half-open band (dia_lo, dia_hi]
        scales = np.asarray(sample_radius(d, a, b, 1.0 - g.random(count)))

        if full:
            keep = np.fromiter(
                (shape_intersects_box(spec.kind, c, s, spec.window)
                 for c, s in zip(centers, scales)),
                dtype=bool, count=count)
        else:
            keep = np.fromiter(
                (shape_inside_box(spec.kind, c, s, spec.window)
                 for c, s in zip(centers, scales)),
                dtype=bool, count=count)
        if keep.any():
            centers_parts.append(centers[keep])
            scales_parts.append(scales[keep])

    if not centers_parts:
        return empty_shape_set(spec.kind, d, spec)
    return ShapeSet(spec.kind, d,
                    np.concatenate(centers_parts), np.concatenate(scales_parts), spec)


def thin_to(shapes: ShapeSet, intensity_lo: float, stream: Stream) -> ShapeSet:
    """Independently keep each shape with probability intensity_lo / intensity.

    The result is distributed as a sample at the lower intensity and is a
    subset of the input, which is what couples sweeps across intensities.
    """
    if shapes.spec is None:
        raise ValueError("thinning needs a ShapeSet with a spec")
    lam = shapes.spec.intensity
    if intensity_lo > lam:
        raise BadIntensity(f"cannot thin {lam} up to {intensity_lo}")
    new_spec = dataclasses.replace(shapes.spec, intensity=intensity_lo)
    if intensity_lo == lam:
        return ShapeSet(shapes.kind, shapes.dim, shapes.centers, shapes.scales, new_spec)
    u = stream.generator().random(shapes.n)
    keep = u * lam < intensity_lo
    return ShapeSet(shapes.kind, shapes.dim,
                    shapes.centers[keep], shapes.scales[keep], new_spec)


def filter_min_diameter(shapes: ShapeSet, eps: float) -> ShapeSet:
    """Drop every shape of diameter < eps (deterministic coarsening).

    Models the resolution-limited soup: raising eps only removes shapes, so
    complement events along an eps chain are monotone per realization.
    Filtering at or beyond dia_max leaves no sampleable diameter band, so the
    result carries spec=None (like a set loaded from CSV).
    """
    if shapes.spec is not None and eps < shapes.spec.dia_min:
        raise ValueError("eps below the set's resolution cutoff")
    keep = shapes.diameters() >= eps
    new_spec = None
    if shapes.spec is not None and eps < shapes.spec.dia_max:
        new_spec = dataclasses.replace(shapes.spec, dia_min=eps)
    return ShapeSet(shapes.kind, shapes.dim,
                    shapes.centers[keep], shapes.scales[keep], new_spec)


# ---------------------------------------------------------------------------
# serialization: CSV rows `kind,dim,center_0..center_{d-1},scale` and an
# equivalent JSON document.  Floats are written with repr, which round-trips
# doubles exactly.

def _csv_header(dim: int) -> list[str]:
    return ["kind", "dim"] + [f"center_{i}" for i in range(dim)] + ["scale"]


def write_csv(shapes: ShapeSet, fp) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(_csv_header(shapes.dim))
    kind = shapes.kind.value
    dim = shapes.dim
    for c, s in zip(shapes.centers, shapes.scales):
        w.writerow([kind, dim] + [repr(float(x)) for x in c] + [repr(float(s))])


def read_csv(fp) -> ShapeSet:
    r = csv.reader(fp)
    header = next(r)
    dim = len(header) - 3
    if header != _csv_header(dim):
        raise ValueError(f"unexpected CSV header {header}")
    kinds, centers, scales = set(), [], []
    for row in r:
        if not row:
            continue
        kinds.add(row[0])
        if int(row[1]) != dim:
            raise ValueError("row dimension disagrees with header")
        centers.append([float(x) for x in row[2:2 + dim]])
        scales.append(float(row[2 + dim]))
    if len(kinds) > 1:
        raise ValueError("mixed shape kinds in one file")
    kind = ShapeKind(kinds.pop()) if kinds else ShapeKind.BALL
    return ShapeSet(kind, dim,
                    np.array(centers, dtype=np.float64).reshape(-1, dim),
                    np.array(scales, dtype=np.float64))


def csv_text(shapes: ShapeSet) -> str:
    buf = io.StringIO()
    write_csv(shapes, buf)
    return buf.getvalue()


def to_json_obj(shapes: ShapeSet) -> dict:
    return {
        "kind": shapes.kind.value,
        "dim": shapes.dim,
        "spec": None if shapes.spec is None else shapes.spec.to_dict(),
        "shapes": [
            {"center": [float(x) for x in c], "scale": float(s)}
            for c, s in zip(shapes.centers, shapes.scales)
        ],
    }


def from_json_obj(obj: dict) -> ShapeSet:
    dim = int(obj["dim"])
    recs = obj["shapes"]
    centers = np.array([r["center"] for r in recs], dtype=np.float64).reshape(-1, dim)
    scales = np.array([r["scale"] for r in recs], dtype=np.float64)
    spec = None if obj.get("spec") is None else SoupSpec.from_dict(obj["spec"])
    return ShapeSet(ShapeKind(obj["kind"]), dim, centers, scales, spec)


def write_json(shapes: ShapeSet, fp) -> None:
    json.dump(to_json_obj(shapes), fp, indent=1)
    fp.write("\n")


def read_json(fp) -> ShapeSet:
    return from_json_obj(json.load(fp))
