"""Axis-aligned primitives in dimension d >= 2.

Boxes, balls, axis-aligned cubes and concentric cubic shells, plus the
closed-set containment and intersection predicates the samplers and
rasterizer rely on.  All containment tests use closed sets and plain float
comparisons.  Constructor validation of concentricity and cubeness uses a
small relative tolerance: the canonical shells have sides like 1/3 whose
centers do not land on exactly representable doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import NotConcentric, NotCube, NotNested

# relative slack for constructor-level shape validation only
_VALIDATE_RTOL = 1e-9


class ShapeKind(Enum):
    BALL = "ball"
    AXIS_CUBE = "axis_cube"


def _coords(seq) -> tuple[float, ...]:
    t = tuple(float(x) for x in seq)
    if len(t) < 2:
        raise ValueError("dimension must be >= 2")
    return t


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box given by opposite corners lo < hi."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", _coords(self.lo))
        object.__setattr__(self, "hi", _coords(self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("corner dimensions differ")
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise ValueError("box needs lo < hi on every axis")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def sides(self) -> tuple[float, ...]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    def center(self) -> tuple[float, ...]:
        return tuple((l + h) / 2.0 for l, h in zip(self.lo, self.hi))

    def volume(self) -> float:
        return math.prod(self.sides())

    def side(self) -> float:
        """Side length; requires the box to be a cube."""
        require_cube(self)
        return self.hi[0] - self.lo[0]

    def is_cube(self) -> bool:
        s = self.sides()
        return (max(s) - min(s)) <= _VALIDATE_RTOL * max(s)

    def contains_point(self, p) -> bool:
        return all(l <= x <= h for x, l, h in zip(p, self.lo, self.hi))

    def contains_point_open(self, p) -> bool:
        return all(l < x < h for x, l, h in zip(p, self.lo, self.hi))

    def contains_box(self, other: "Box") -> bool:
        return all(sl <= ol and oh <= sh
                   for sl, sh, ol, oh in zip(self.lo, self.hi, other.lo, other.hi))


def require_cube(box: Box) -> None:
    if not box.is_cube():
        raise NotCube(f"box sides {box.sides()} are not equal")


def unit_box(dim: int) -> Box:
    return Box((0.0,) * dim, (1.0,) * dim)


def cube_box(center, half_side: float) -> Box:
    c = _coords(center)
    return Box(tuple(x - half_side for x in c), tuple(x + half_side for x in c))


def inflate(box: Box, r: float) -> Box:
    """Grow the box by r in the max-norm (every face pushed out by r)."""
    if r < 0:
        raise ValueError("inflation must be nonnegative")
    if r == 0:
        return box
    return Box(tuple(l - r for l in box.lo), tuple(h + r for h in box.hi))


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _coords(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class SimpleShell:
    """Region between two concentric axis-aligned cubes.

    The shell is the open outer cube minus the closed inner cube.  The inner
    closure must sit strictly inside the outer cube.
    """

    outer: Box
    inner: Box

    def __post_init__(self):
        if self.outer.dim != self.inner.dim:
            raise ValueError("shell boxes have different dimensions")
        require_cube(self.outer)
        require_cube(self.inner)
        co, ci = self.outer.center(), self.inner.center()
        tol = _VALIDATE_RTOL * self.outer.side()
        if any(abs(a - b) > tol for a, b in zip(co, ci)):
            raise NotConcentric(f"centers differ: {co} vs {ci}")
        if not all(ol < il and ih < oh for ol, oh, il, ih
                   in zip(self.outer.lo, self.outer.hi, self.inner.lo, self.inner.hi)):
            raise NotNested("inner closure must be strictly inside the outer cube")

    @property
    def dim(self) -> int:
        return self.outer.dim


def shell_new(outer: Box, inner: Box) -> SimpleShell:
    return SimpleShell(outer, inner)


def scale_shell(shell: SimpleShell, s: float) -> SimpleShell:
    """Image of the shell under x -> s*x (scaling about the origin)."""
    if s <= 0:
        raise ValueError("scale factor must be positive")
    return SimpleShell(
        Box(tuple(s * x for x in shell.outer.lo), tuple(s * x for x in shell.outer.hi)),
        Box(tuple(s * x for x in shell.inner.lo), tuple(s * x for x in shell.inner.hi)),
    )


def translate_shell(shell: SimpleShell, v) -> SimpleShell:
    v = tuple(float(x) for x in v)
    if len(v) != shell.dim:
        raise ValueError("translation dimension mismatch")

    def _shift(b: Box) -> Box:
        return Box(tuple(l + dx for l, dx in zip(b.lo, v)),
                   tuple(h + dx for h, dx in zip(b.hi, v)))

    return SimpleShell(_shift(shell.outer), _shift(shell.inner))


def point_box_distance(p, box: Box) -> float:
    """Euclidean distance from a point to the closed box (0 if inside)."""
    return math.sqrt(sum(max(l - x, x - h, 0.0) ** 2
                         for x, l, h in zip(p, box.lo, box.hi)))


def point_box_boundary_distance(p, box: Box) -> float:
    """Euclidean distance from a point to the box boundary."""
    q = [max(l - x, x - h) for x, l, h in zip(p, box.lo, box.hi)]
    outside = math.sqrt(sum(max(v, 0.0) ** 2 for v in q))
    if outside > 0.0:
        return outside
    return -max(q)  # inside: distance to the nearest face


def ball_intersects_box(ball: Ball, box: Box) -> bool:
    return point_box_distance(ball.center, box) <= ball.radius


def ball_inside_box(ball: Ball, box: Box) -> bool:
    return all(x - ball.radius >= l and x + ball.radius <= h
               for x, l, h in zip(ball.center, box.lo, box.hi))


def cube_intersects_box(center, half_side: float, box: Box) -> bool:
    return all(x - half_side <= h and x + half_side >= l
               for x, l, h in zip(center, box.lo, box.hi))


def cube_inside_box(center, half_side: float, box: Box) -> bool:
    return all(x - half_side >= l and x + half_side <= h
               for x, l, h in zip(center, box.lo, box.hi))


def shape_intersects_box(kind: ShapeKind, center, scale: float, box: Box) -> bool:
    if kind is ShapeKind.BALL:
        return ball_intersects_box(Ball(center, scale), box)
    return cube_intersects_box(center, scale, box)


def shape_inside_box(kind: ShapeKind, center, scale: float, box: Box) -> bool:
    if kind is ShapeKind.BALL:
        return ball_inside_box(Ball(center, scale), box)
    return cube_inside_box(center, scale, box)


def scale_from_diameter(kind: ShapeKind, dia: float, dim: int) -> float:
    """Radius (ball) or half-side (cube) of a shape of the given diameter.

    A cube's diameter is its main diagonal, so half-side = dia / (2*sqrt(d)).
    """
    if kind is ShapeKind.BALL:
        return dia / 2.0
    return dia / (2.0 * math.sqrt(dim))


def diameter_from_scale(kind: ShapeKind, scale: float, dim: int) -> float:
    if kind is ShapeKind.BALL:
        return 2.0 * scale
    return 2.0 * math.sqrt(dim) * scale
