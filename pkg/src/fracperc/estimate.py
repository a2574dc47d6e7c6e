"""Monte Carlo estimation of crossing-type event probabilities.

An :class:`EventSpec` pairs a model (a soup rastered at resolution h, or a
fractal retained set) with an event on it: shell crossing, face-to-face box
crossing, planar circuit, or component diameter exceeding a threshold.  All
four events are monotone in the underlying randomness, which the coupled
sweeps exploit:

* soup sweeps thin one master sample down the intensity grid, so per-trial
  indicators are nonincreasing in intensity, exactly;
* fractal sweeps reuse the per-cell uniforms across the retention grid, so
  indicators are nondecreasing in p, exactly;
* the resolution scan filters one master sample upward in the diameter
  cutoff, so indicators are nondecreasing in eps, exactly.

Violations raise NonMonotoneEvidence since they can only come from a bug.

Binomial uncertainty uses Wilson score intervals, which stay honest near 0
and 1.  ``bisect_critical`` brackets a critical parameter by bisection and
only moves an endpoint when the Wilson interval clears the threshold; it
never claims a point estimate.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import NonMonotoneEvidence, ResolutionTooCoarse
from .fractal import (
    FractalSpec,
    fractal_crossing,
    fractal_shell_crossing,
    retained_component_diameter,
    sample_fractal,
)
from .geometry import Box, SimpleShell
from .raster import (
    Adjacency,
    CoverageAccumulator,
    Grid,
    crosses_box,
    crosses_shell,
    has_circuit,
    largest_component_diameter,
    rasterize,
)
from .rng import Stream
from .soup import SoupSpec, empty_shape_set, sample_soup

_TAG_TRIAL = 0x45
_TAG_BISECT = 0x42
_SUB_SAMPLE = 0x01
_SUB_THIN = 0x02


def wilson_interval(successes: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one trial")
    if not (0 <= successes <= n):
        raise ValueError("successes outside 0..n")
    if not (0.0 < level < 1.0):
        raise ValueError("confidence level must lie in (0, 1)")
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    phat = successes / n
    zz = z * z
    denom = 1.0 + zz / n
    center = (phat + zz / (2.0 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / n + zz / (4.0 * n * n))
    # the interval endpoints are exactly 0/1 at the degenerate tails; pin
    # them so float noise cannot leak past the anchors
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return (lo, hi)


@dataclass(frozen=True)
class Estimate:
    """A binomial point estimate with its Wilson interval."""

    p_hat: float
    ci_lo: float
    ci_hi: float
    n: int
    successes: int
    level: float
    seed: int

    @staticmethod
    def from_successes(successes: int, n: int, level: float, seed: int) -> "Estimate":
        lo, hi = wilson_interval(successes, n, level)
        return Estimate(p_hat=successes / n, ci_lo=lo, ci_hi=hi,
                        n=n, successes=successes, level=level, seed=seed)


# --- models and events -------------------------------------------------------

@dataclass(frozen=True)
class SoupModel:
    spec: SoupSpec
    h: float
    adjacency: Adjacency = Adjacency.FACE

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("cell size must be positive")


@dataclass(frozen=True)
class FractalModel:
    spec: FractalSpec
    adjacency: Adjacency = Adjacency.VERTEX
    corner_anchored: bool = False


@dataclass(frozen=True)
class ShellCrossing:
    """Vacant (soup) or retained (fractal) crossing of a shell.  For
    fractal models the canonical shell is implied and `shell` must be None."""

    shell: SimpleShell | None = None


@dataclass(frozen=True)
class BoxCrossing:
    """Face-to-face crossing along `axis`; fractal models cross the unit
    cube itself and take `box` = None."""

    box: Box | None = None
    axis: int = 0


@dataclass(frozen=True)
class Circuit:
    """Planar vacant circuit in a shell (soup models only)."""

    shell: SimpleShell


@dataclass(frozen=True)
class ComponentDiameterExceeds:
    threshold: float


Event = ShellCrossing | BoxCrossing | Circuit | ComponentDiameterExceeds
Model = SoupModel | FractalModel


@dataclass(frozen=True)
class EventSpec:
    model: Model
    event: Event

    def __post_init__(self):
        soup = isinstance(self.model, SoupModel)
        ev = self.event
        if isinstance(ev, ShellCrossing):
            if soup and ev.shell is None:
                raise ValueError("soup shell crossing needs an explicit shell")
            if not soup and ev.shell is not None:
                raise ValueError("fractal shell crossing uses the canonical shell")
        elif isinstance(ev, BoxCrossing):
            if soup and ev.box is None:
                raise ValueError("soup box crossing needs an explicit box")
            if not soup and ev.box is not None:
                raise ValueError("fractal box crossing spans the unit cube")
        elif isinstance(ev, Circuit) and not soup:
            raise ValueError("circuits are only defined for soup models")


def _box_dict(b: Box | None) -> dict | None:
    return None if b is None else {"lo": list(b.lo), "hi": list(b.hi)}


def _shell_dict(s: SimpleShell | None) -> dict | None:
    return None if s is None else {"outer": _box_dict(s.outer), "inner": _box_dict(s.inner)}


def event_spec_to_dict(espec: EventSpec) -> dict:
    m = espec.model
    if isinstance(m, SoupModel):
        model = {"type": "soup", "spec": m.spec.to_dict(), "h": m.h,
                 "adjacency": m.adjacency.value}
    else:
        model = {"type": "fractal", "spec": m.spec.to_dict(),
                 "adjacency": m.adjacency.value,
                 "corner_anchored": m.corner_anchored}
    ev = espec.event
    if isinstance(ev, ShellCrossing):
        event = {"type": "shell_crossing", "shell": _shell_dict(ev.shell)}
    elif isinstance(ev, BoxCrossing):
        event = {"type": "box_crossing", "box": _box_dict(ev.box), "axis": ev.axis}
    elif isinstance(ev, Circuit):
        event = {"type": "circuit", "shell": _shell_dict(ev.shell)}
    else:
        event = {"type": "component_diameter_exceeds", "threshold": ev.threshold}
    return {"model": model, "event": event}


def estimate_to_json_obj(espec: EventSpec, est: Estimate) -> dict:
    doc = event_spec_to_dict(espec)
    doc.update({
        "n": est.n,
        "p_hat": est.p_hat,
        "ci": [est.ci_lo, est.ci_hi],
        "level": est.level,
        "seed": est.seed,
    })
    return doc


# --- per-trial evaluation ----------------------------------------------------

def _grid_event(grid: Grid, event: Event, adj: Adjacency) -> bool:
    if isinstance(event, ShellCrossing):
        return crosses_shell(grid, event.shell, adj)
    if isinstance(event, BoxCrossing):
        return crosses_box(grid, event.box, event.axis, adj)
    if isinstance(event, Circuit):
        return has_circuit(grid, event.shell, adj)
    return largest_component_diameter(grid, adj) > event.threshold


def _fractal_event(rset, event: Event, model: FractalModel) -> bool:
    if isinstance(event, ShellCrossing):
        return fractal_shell_crossing(rset, model.adjacency,
                                      corner_anchored=model.corner_anchored)
    if isinstance(event, BoxCrossing):
        return fractal_crossing(rset, event.axis, model.adjacency)
    return retained_component_diameter(rset, model.adjacency) > event.threshold


def eval_event(espec: EventSpec, stream: Stream) -> bool:
    """One indicator draw; pure function of (espec, stream path)."""
    if isinstance(espec.model, SoupModel):
        shapes = sample_soup(espec.model.spec, stream.child(_SUB_SAMPLE))
        grid = rasterize(shapes, espec.model.spec.window, espec.model.h)
        return _grid_event(grid, espec.event, espec.model.adjacency)
    rset = sample_fractal(espec.model.spec, stream.child(_SUB_SAMPLE))
    return _fractal_event(rset, espec.event, espec.model)


def run_trials(fn, n: int, threads: int = 1) -> list:
    """Map fn over trial indices; output order is by index regardless of
    worker count, so thread counts change wall time only."""
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        chunk = max(1, n // (threads * 8))
        return list(ex.map(fn, range(n), chunksize=chunk))


def _mc(espec: EventSpec, n: int, root: Stream, level: float, seed: int,
        threads: int) -> Estimate:
    hits = run_trials(lambda i: eval_event(espec, root.child(i)), n, threads)
    return Estimate.from_successes(int(np.sum(hits)), n, level, seed)


def mc_estimate(espec: EventSpec, n: int, seed: int, level: float = 0.95,
                threads: int = 1) -> Estimate:
    """Estimate the event probability from n independent trials.

    Trial i draws from a stream keyed by (seed, i); the estimator seed, not
    the model spec's seed, governs the trials.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    return _mc(espec, n, Stream(seed, _TAG_TRIAL), level, seed, threads)


# --- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    param_name: str
    params: tuple[float, ...]
    estimates: tuple[Estimate, ...]
    coupled: bool
    seed: int

    def write_csv(self, fp) -> None:
        fp.write("param,p_hat,ci_lo,ci_hi,n\n")
        for x, e in zip(self.params, self.estimates):
            fp.write(f"{x!r},{e.p_hat!r},{e.ci_lo!r},{e.ci_hi!r},{e.n}\n")


def _with_param(espec: EventSpec, value: float) -> EventSpec:
    if isinstance(espec.model, SoupModel):
        spec = dataclasses.replace(espec.model.spec, intensity=value)
        return dataclasses.replace(espec, model=dataclasses.replace(espec.model, spec=spec))
    spec = dataclasses.replace(espec.model.spec, p=value)
    return dataclasses.replace(espec, model=dataclasses.replace(espec.model, spec=spec))


def sweep_param_name(espec: EventSpec) -> str:
    return "lambda" if isinstance(espec.model, SoupModel) else "p"


def _soup_sweep_trial(espec: EventSpec, lambdas: tuple[float, ...],
                      stream: Stream) -> np.ndarray:
    """Indicators for one trial at every intensity, from one master sample
    thinned down the grid and rastered incrementally."""
    model = espec.model
    top = dataclasses.replace(model.spec, intensity=lambdas[-1])
    master = sample_soup(top, stream.child(_SUB_SAMPLE))
    v = stream.child(_SUB_THIN).generator().random(master.n)
    # shape present at lambda iff v * lambda_max < lambda
    first_idx = np.searchsorted(np.asarray(lambdas), v * lambdas[-1], side="right")
    acc = CoverageAccumulator(master.kind, model.spec.window, model.h)
    out = np.zeros(len(lambdas), dtype=bool)
    for j in range(len(lambdas)):
        sel = first_idx == j
        if sel.any():
            acc.add(master.centers[sel], master.scales[sel])
        out[j] = _grid_event(acc.grid(), espec.event, model.adjacency)
    return out


def _fractal_sweep_trial(espec: EventSpec, ps: tuple[float, ...],
                         stream: Stream) -> np.ndarray:
    out = np.zeros(len(ps), dtype=bool)
    for j, p in enumerate(ps):
        sub = _with_param(espec, p)
        rset = sample_fractal(sub.model.spec, stream.child(_SUB_SAMPLE))
        out[j] = _fractal_event(rset, sub.event, sub.model)
    return out


def sweep(espec: EventSpec, params, n: int, seed: int, coupled: bool = True,
          level: float = 0.95, threads: int = 1) -> SweepResult:
    """Estimate the event probability on an ascending parameter grid
    (intensity for soups, p for fractals).

    Coupled sweeps share randomness across the grid so each trial's
    indicator vector is monotone exactly; any violation raises
    NonMonotoneEvidence.
    """
    params = tuple(float(x) for x in params)
    if len(params) < 1 or any(b <= a for a, b in zip(params, params[1:])):
        raise ValueError("params must be strictly ascending")
    soup = isinstance(espec.model, SoupModel)
    if soup and espec.model.h > espec.model.spec.dia_min / 4.0:
        raise ResolutionTooCoarse("cell size too coarse for the soup's dia_min")

    if len(params) == 1:
        # single point: identical stream usage to mc_estimate
        est = _mc(_with_param(espec, params[0]), n, Stream(seed, _TAG_TRIAL),
                  level, seed, threads)
        return SweepResult(sweep_param_name(espec), params, (est,), coupled, seed)

    if not coupled:
        ests = tuple(
            _mc(_with_param(espec, x), n, Stream(seed, _TAG_TRIAL, j), level, seed,
                threads)
            for j, x in enumerate(params))
        return SweepResult(sweep_param_name(espec), params, ests, False, seed)

    trial_fn = _soup_sweep_trial if soup else _fractal_sweep_trial
    rows = run_trials(
        lambda i: trial_fn(espec, params, Stream(seed, _TAG_TRIAL).child(i)),
        n, threads)
    mat = np.vstack(rows)
    diffs = np.diff(mat.astype(np.int8), axis=1)
    if soup and (diffs > 0).any():
        raise NonMonotoneEvidence("indicator increased along the intensity grid")
    if not soup and (diffs < 0).any():
        raise NonMonotoneEvidence("indicator decreased along the p grid")
    hits = mat.sum(axis=0)
    ests = tuple(Estimate.from_successes(int(k), n, level, seed) for k in hits)
    return SweepResult(sweep_param_name(espec), params, ests, True, seed)


def epsilon_scan(espec: EventSpec, eps_list, n: int, seed: int,
                 level: float = 0.95, threads: int = 1) -> SweepResult:
    """Event probability as the resolution cutoff varies, coupled.

    eps_list must be strictly descending and stay at or above the model
    spec's dia_min.  Each trial draws one master sample at the smallest
    cutoff and filters it upward; the raster uses h = min(eps) / 4.
    """
    if not isinstance(espec.model, SoupModel):
        raise ValueError("the resolution scan applies to soup models")
    eps = tuple(float(x) for x in eps_list)
    if len(eps) < 1 or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_list must be strictly descending")
    if eps[-1] < espec.model.spec.dia_min:
        raise ValueError("eps below the spec's resolution floor")
    h = eps[-1] / 4.0
    spec0 = espec.model.spec
    # a cutoff at or past dia_max retains nothing, so skip sampling entirely
    base = (dataclasses.replace(spec0, dia_min=eps[-1])
            if eps[-1] < spec0.dia_max else None)

    def trial(i: int) -> np.ndarray:
        stream = Stream(seed, _TAG_TRIAL).child(i)
        master = (empty_shape_set(spec0.kind, spec0.dim) if base is None
                  else sample_soup(base, stream.child(_SUB_SAMPLE)))
        dia = master.diameters()
        acc = CoverageAccumulator(master.kind, spec0.window, h)
        added = np.zeros(master.n, dtype=bool)
        out = np.zeros(len(eps), dtype=bool)
        for j, e in enumerate(eps):
            sel = (dia >= e) & ~added
            if sel.any():
                acc.add(master.centers[sel], master.scales[sel])
                added |= sel
            out[j] = _grid_event(acc.grid(), espec.event, espec.model.adjacency)
        return out

    rows = run_trials(trial, n, threads)
    mat = np.vstack(rows)
    if (np.diff(mat.astype(np.int8), axis=1) > 0).any():
        raise NonMonotoneEvidence("indicator increased as eps decreased")
    ests = tuple(Estimate.from_successes(int(k), n, level, seed)
                 for k in mat.sum(axis=0))
    return SweepResult("eps", eps, ests, True, seed)


def lambda_epsilon_scan(espec: EventSpec, lambdas, eps_list, n: int, seed: int,
                        level: float = 0.95, threads: int = 1
                        ) -> dict[float, SweepResult]:
    """Coupled intensity sweep at several resolution cutoffs at once.

    One master sample per trial feeds every (lambda, eps) pair, so per-trial
    indicators are nonincreasing in intensity and nondecreasing in eps,
    exactly.  Returns one intensity SweepResult per cutoff.
    """
    if not isinstance(espec.model, SoupModel):
        raise ValueError("the resolution scan applies to soup models")
    lambdas = tuple(float(x) for x in lambdas)
    eps = tuple(float(x) for x in eps_list)
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])) or not lambdas:
        raise ValueError("lambdas must be strictly ascending")
    if any(b >= a for a, b in zip(eps, eps[1:])) or not eps:
        raise ValueError("eps_list must be strictly descending")
    h = eps[-1] / 4.0
    base = dataclasses.replace(espec.model.spec,
                               intensity=lambdas[-1], dia_min=eps[-1])

    def trial(i: int) -> np.ndarray:
        stream = Stream(seed, _TAG_TRIAL).child(i)
        master = sample_soup(base, stream.child(_SUB_SAMPLE))
        v = stream.child(_SUB_THIN).generator().random(master.n)
        first_idx = np.searchsorted(np.asarray(lambdas), v * lambdas[-1],
                                    side="right")
        dia = master.diameters()
        out = np.zeros((len(eps), len(lambdas)), dtype=bool)
        for r, e in enumerate(eps):
            acc = CoverageAccumulator(master.kind, base.window, h)
            ok = dia >= e
            for j in range(len(lambdas)):
                sel = ok & (first_idx == j)
                if sel.any():
                    acc.add(master.centers[sel], master.scales[sel])
                out[r, j] = _grid_event(acc.grid(), espec.event,
                                        espec.model.adjacency)
        return out

    cubes = np.stack(run_trials(trial, n, threads))
    if (np.diff(cubes.astype(np.int8), axis=2) > 0).any():
        raise NonMonotoneEvidence("indicator increased along the intensity grid")
    if (np.diff(cubes.astype(np.int8), axis=1) > 0).any():
        raise NonMonotoneEvidence("indicator increased as eps decreased")
    results = {}
    for r, e in enumerate(eps):
        ests = tuple(Estimate.from_successes(int(k), n, level, seed)
                     for k in cubes[:, r, :].sum(axis=0))
        results[e] = SweepResult("lambda", lambdas, ests, True, seed)
    return results


# --- critical-parameter bracketing -------------------------------------------

@dataclass(frozen=True)
class BisectResult:
    """A bracket [param_lo, param_hi] for the parameter where the event
    probability crosses `theta`.  Never a point estimate: endpoints move
    only when a Wilson interval clears theta entirely.  status is
    "bracketed", "inconclusive" (some interval straddled theta, or an
    endpoint failed its side), or "degenerate" (empty input range)."""

    param_lo: float
    param_hi: float
    theta: float
    direction: str
    evaluations: tuple[tuple[float, Estimate], ...]
    status: str


def bisect_critical(espec: EventSpec, param_lo: float, param_hi: float,
                    theta: float = 0.05, n_per_eval: int = 400,
                    max_evals: int = 12, width_tol: float = 0.0,
                    seed: int = 0, level: float = 0.95,
                    threads: int = 1) -> BisectResult:
    """Bracket the parameter where P(event) crosses theta.

    Soup events fall with intensity and fractal events rise with p; the
    bisection is oriented accordingly.  Endpoints are evaluated first; if
    either fails to sit cleanly on its side of theta the result is flagged
    inconclusive at the full input range.
    """
    if param_lo > param_hi:
        raise ValueError("param_lo must not exceed param_hi")
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0, 1)")
    decreasing = isinstance(espec.model, SoupModel)
    direction = "decreasing" if decreasing else "increasing"
    if param_lo == param_hi:
        return BisectResult(param_lo, param_hi, theta, direction, (), "degenerate")

    evals: list[tuple[float, Estimate]] = []

    def evaluate(x: float) -> Estimate:
        est = _mc(_with_param(espec, x), n_per_eval,
                  Stream(seed, _TAG_BISECT, len(evals)), level, seed, threads)
        evals.append((x, est))
        return est

    lo, hi = float(param_lo), float(param_hi)
    est_lo, est_hi = evaluate(lo), evaluate(hi)
    above, below = (est_lo, est_hi) if decreasing else (est_hi, est_lo)
    if not (above.ci_lo > theta and below.ci_hi < theta):
        return BisectResult(lo, hi, theta, direction, tuple(evals), "inconclusive")

    status = "bracketed"
    while len(evals) < max_evals and (hi - lo) > width_tol:
        mid = (lo + hi) / 2.0
        est = evaluate(mid)
        if est.ci_lo > theta:
            # probability above theta at mid
            if decreasing:
                lo = mid
            else:
                hi = mid
        elif est.ci_hi < theta:
            if decreasing:
                hi = mid
            else:
                lo = mid
        else:
            status = "inconclusive"
            break
    return BisectResult(lo, hi, theta, direction, tuple(evals), status)
