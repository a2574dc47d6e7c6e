"""Small deterministic SVG writers: planar scenes and estimate charts.

No plotting dependency; output bytes depend only on the inputs, which keeps
CLI artifacts reproducible.  World y points up in scenes.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionNot2
from .geometry import Box, ShapeKind, SimpleShell
from .raster import Adjacency, Grid, complement_components
from .soup import ShapeSet

_PALETTE = (
    "#4878cf", "#ee854a", "#6acc64", "#d65f5f", "#956cb4",
    "#8c613c", "#dc7ec0", "#797979", "#d5bb67", "#82c6e2",
)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class _Scene:
    def __init__(self, window: Box, size: int):
        self.window = window
        w = window.sides()
        self.scale = size / max(w)
        self.width = w[0] * self.scale
        self.height = w[1] * self.scale
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(self.width)}"'
            f' height="{_fmt(self.height)}"'
            f' viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">',
            f'<rect x="0" y="0" width="{_fmt(self.width)}"'
            f' height="{_fmt(self.height)}" fill="#ffffff"/>',
        ]

    def xy(self, x: float, y: float) -> tuple[float, float]:
        return ((x - self.window.lo[0]) * self.scale,
                self.height - (y - self.window.lo[1]) * self.scale)

    def rect(self, lo, hi, fill: str, stroke: str | None = None) -> None:
        x0, y1 = self.xy(lo[0], lo[1])
        x1, y0 = self.xy(hi[0], hi[1])
        s = (f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}"'
             f' height="{_fmt(y1 - y0)}" fill="{fill}"')
        if stroke:
            s += f' stroke="{stroke}" stroke-width="1"'
        self.parts.append(s + "/>")

    def circle(self, c, r: float, fill: str) -> None:
        x, y = self.xy(c[0], c[1])
        self.parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}"'
                          f' r="{_fmt(r * self.scale)}" fill="{fill}"/>')

    def box_outline(self, box: Box, stroke: str) -> None:
        x0, y1 = self.xy(box.lo[0], box.lo[1])
        x1, y0 = self.xy(box.hi[0], box.hi[1])
        self.parts.append(
            f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}"'
            f' height="{_fmt(y1 - y0)}" fill="none" stroke="{stroke}"'
            ' stroke-width="1.5"/>')

    def text(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _require_planar(dim: int) -> None:
    if dim != 2:
        raise DimensionNot2("scene drawings are two dimensional")


def shapes_svg(shapes: ShapeSet, window: Box, size: int = 640,
               shell: SimpleShell | None = None) -> str:
    """Draw a shape set over its window; balls as circles, cubes as squares."""
    _require_planar(shapes.dim)
    sc = _Scene(window, size)
    order = np.argsort(-shapes.scales, kind="stable")
    for i in order:
        c = shapes.centers[i]
        r = shapes.scales[i]
        fill = _PALETTE[int(i) % len(_PALETTE)] + "b0"
        if shapes.kind is ShapeKind.BALL:
            sc.circle(c, r, fill)
        else:
            sc.rect((c[0] - r, c[1] - r), (c[0] + r, c[1] + r), fill)
    if shell is not None:
        sc.box_outline(shell.outer, "#000000")
        sc.box_outline(shell.inner, "#000000")
    sc.box_outline(window, "#444444")
    return sc.text()


def grid_svg(grid: Grid, adjacency: Adjacency = Adjacency.FACE,
             shell: SimpleShell | None = None, size: int = 640) -> str:
    """Draw a raster: covered cells dark, vacant components in cycled colors.

    Consecutive same-color cells in a row merge into one rectangle.
    """
    _require_planar(grid.dim)
    sc = _Scene(grid.window(), size)
    comp = complement_components(grid, adjacency)
    lab = comp.labels
    h = grid.h
    ox, oy = grid.origin
    for iy in range(grid.dims[1]):
        row = lab[:, iy]
        ix = 0
        while ix < grid.dims[0]:
            v = row[ix]
            j = ix + 1
            while j < grid.dims[0] and row[j] == v:
                j += 1
            fill = "#1a1a2e" if v < 0 else _PALETTE[int(v) % len(_PALETTE)]
            sc.rect((ox + ix * h, oy + iy * h), (ox + j * h, oy + (iy + 1) * h),
                    fill)
            ix = j
    if shell is not None:
        sc.box_outline(shell.outer, "#000000")
        sc.box_outline(shell.inner, "#000000")
    return sc.text()


def curve_svg(series: list[dict], xlabel: str, ylabel: str,
              width: int = 640, height: int = 420,
              vlines: tuple[float, ...] = (), hlines: tuple[float, ...] = (),
              y_range: tuple[float, float] = (0.0, 1.0)) -> str:
    """Line chart with optional confidence bands and marker lines.

    Each series dict: x (ascending), y, optional lo/hi bands, optional label.
    """
    if not series or any(len(s["x"]) == 0 for s in series):
        raise ValueError("need at least one nonempty series")
    ml, mr, mt, mb = 52, 16, 14, 38
    pw, ph = width - ml - mr, height - mt - mb
    xs_all = [x for s in series for x in s["x"]]
    x0, x1 = min(xs_all), max(xs_all)
    if vlines:
        x0, x1 = min(x0, *vlines), max(x1, *vlines)
    if x1 == x0:
        x1 = x0 + 1.0
    y0, y1 = y_range

    def px(x: float) -> float:
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y: float) -> float:
        return mt + (1.0 - (y - y0) / (y1 - y0)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}"'
        f' height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none"'
        ' stroke="#444444" stroke-width="1"/>',
    ]
    font = 'font-family="monospace" font-size="11"'
    for k in range(5):
        yv = y0 + (y1 - y0) * k / 4
        yy = py(yv)
        parts.append(f'<line x1="{ml}" y1="{_fmt(yy)}" x2="{ml + pw}"'
                     f' y2="{_fmt(yy)}" stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{ml - 6}" y="{_fmt(yy + 4)}" {font}'
                     f' text-anchor="end">{_fmt(yv)}</text>')
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        xx = px(xv)
        parts.append(f'<text x="{_fmt(xx)}" y="{height - mb + 16}" {font}'
                     f' text-anchor="middle">{_fmt(xv)}</text>')
    parts.append(f'<text x="{ml + pw / 2}" y="{height - 6}" {font}'
                 f' text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="14" y="{mt + ph / 2}" {font} text-anchor="middle"'
                 f' transform="rotate(-90 14 {mt + ph / 2})">{ylabel}</text>')
    for yv in hlines:
        yy = py(yv)
        parts.append(f'<line x1="{ml}" y1="{_fmt(yy)}" x2="{ml + pw}"'
                     f' y2="{_fmt(yy)}" stroke="#999999" stroke-width="1"'
                     ' stroke-dasharray="5,4"/>')
    for xv in vlines:
        xx = px(xv)
        parts.append(f'<line x1="{_fmt(xx)}" y1="{mt}" x2="{_fmt(xx)}"'
                     f' y2="{mt + ph}" stroke="#333333" stroke-width="1"'
                     ' stroke-dasharray="3,3"/>')
    for si, s in enumerate(series):
        color = _PALETTE[si % len(_PALETTE)]
        xs, ys = s["x"], s["y"]
        if "lo" in s:
            ring = ([(px(x), py(v)) for x, v in zip(xs, s["lo"])]
                    + [(px(x), py(v)) for x, v in zip(reversed(xs), reversed(s["hi"]))])
            pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in ring)
            parts.append(f'<polygon points="{pts}" fill="{color}"'
                         ' fill-opacity="0.18" stroke="none"/>')
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(v))}" for x, v in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}"'
                     ' stroke-width="1.5"/>')
        for x, v in zip(xs, ys):
            parts.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(v))}"'
                         f' r="2.5" fill="{color}"/>')
        if "label" in s:
            yy = py(ys[-1])
            parts.append(f'<text x="{ml + pw - 4}" y="{_fmt(yy - 5 - 13 * si)}"'
                         f' {font} text-anchor="end"'
                         f' fill="{color}">{s["label"]}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def sweep_svg(result, **kw) -> str:
    """Chart a SweepResult: p_hat curve with its confidence band."""
    s = {
        "x": list(result.params),
        "y": [e.p_hat for e in result.estimates],
        "lo": [e.ci_lo for e in result.estimates],
        "hi": [e.ci_hi for e in result.estimates],
    }
    return curve_svg([s], result.param_name, "P(event)", **kw)


def bisect_svg(result, **kw) -> str:
    """Chart a BisectResult: evaluations, theta line, bracket lines."""
    pts = sorted(result.evaluations, key=lambda t: t[0])
    s = {
        "x": [x for x, _ in pts],
        "y": [e.p_hat for _, e in pts],
        "lo": [e.ci_lo for _, e in pts],
        "hi": [e.ci_hi for _, e in pts],
    }
    return curve_svg([s], "param", "P(event)",
                     vlines=(result.param_lo, result.param_hi),
                     hlines=(result.theta,), **kw)
