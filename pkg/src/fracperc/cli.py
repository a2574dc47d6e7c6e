"""Command-line entry point.

One subcommand per experiment; all randomness flows from --seed.  Every
file-writing run also writes the fully resolved flag set to
<out>.config.json, and re-running with --config on that file reproduces
the outputs byte for byte.  Wall time goes to stderr so output files stay
deterministic.  Exit codes: 0 success, 2 bad usage or parameters, 3 I/O
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import renorm as renorm_mod
from . import svg as svg_mod
from .errors import FracpercError
from .estimate import (
    BoxCrossing,
    Circuit,
    ComponentDiameterExceeds,
    EventSpec,
    FractalModel,
    ShellCrossing,
    SoupModel,
    bisect_critical,
    epsilon_scan,
    estimate_to_json_obj,
    event_spec_to_dict,
    mc_estimate,
    sweep,
)
from .fractal import FractalSpec, exact_crossing_prob
from .geometry import Box, ShapeKind, SimpleShell
from .raster import Adjacency, rasterize
from .soup import SoupMode, SoupSpec, sample_soup, to_json_obj, write_csv

_MODES = {"full": SoupMode.FULL_SPACE_RESTRICTED,
          "contained": SoupMode.CONTAINED_IN_DOMAIN}
_KINDS = {"ball": ShapeKind.BALL, "cube": ShapeKind.AXIS_CUBE}
_ADJS = {"face": Adjacency.FACE, "vertex": Adjacency.VERTEX}


class UsageError(Exception):
    pass


def _floats(v, what: str) -> tuple[float, ...]:
    if v is None:
        raise UsageError(f"missing {what}")
    if isinstance(v, str):
        v = v.split(",")
    try:
        return tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise UsageError(f"bad {what}: expected comma-separated floats")


def _ints(v, what: str) -> tuple[int, ...]:
    if v is None:
        raise UsageError(f"missing {what}")
    if isinstance(v, str):
        v = v.split(",")
    try:
        return tuple(int(x) for x in v)
    except (TypeError, ValueError):
        raise UsageError(f"bad {what}: expected comma-separated integers")


def _box(v, dim: int, what: str) -> Box:
    vals = _floats(v, what)
    if len(vals) != 2 * dim:
        raise UsageError(f"{what} needs {2 * dim} floats (lo then hi)")
    return Box(vals[:dim], vals[dim:])


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"missing --{name.replace('_', '-')}")


def _soup_spec(args) -> SoupSpec:
    _need(args, "dim", "intensity", "dia_min", "dia_max", "window")
    return SoupSpec(
        dim=args.dim,
        intensity=args.intensity,
        kind=_KINDS[args.kind],
        dia_min=args.dia_min,
        dia_max=args.dia_max,
        window=_box(args.window, args.dim, "--window"),
        mode=_MODES[args.mode],
        seed=args.seed,
    )


def _shell(args, dim: int) -> SimpleShell:
    _need(args, "shell_outer", "shell_inner")
    return SimpleShell(_box(args.shell_outer, dim, "--shell-outer"),
                       _box(args.shell_inner, dim, "--shell-inner"))


def _model(args):
    if args.model == "soup":
        spec = _soup_spec(args)
        h = args.h if args.h is not None else spec.dia_min / 4.0
        adj = _ADJS[args.adjacency or "face"]
        return SoupModel(spec, h, adj)
    _need(args, "N", "p", "depth", "dim")
    spec = FractalSpec(N=args.N, dim=args.dim, p=args.p, depth=args.depth,
                       seed=args.seed)
    adj = _ADJS[args.adjacency or "vertex"]
    return FractalModel(spec, adj, corner_anchored=args.corner_anchored)


def _event(args, model):
    soup = isinstance(model, SoupModel)
    dim = model.spec.dim
    if args.event == "shell":
        return ShellCrossing(_shell(args, dim) if soup else None)
    if args.event == "box":
        if soup:
            _need(args, "box")
            return BoxCrossing(_box(args.box, dim, "--box"), args.axis)
        return BoxCrossing(None, args.axis)
    if args.event == "circuit":
        return Circuit(_shell(args, dim))
    _need(args, "threshold")
    return ComponentDiameterExceeds(args.threshold)


# --- config round-trip -------------------------------------------------------

_SKIP_KEYS = {"command", "config", "func"}


def _resolved_config(args, command: str) -> dict:
    doc = {"command": command}
    for key, val in sorted(vars(args).items()):
        if key in _SKIP_KEYS or val is None:
            continue
        doc[key] = list(val) if isinstance(val, tuple) else val
    return doc


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w") as fp:
        json.dump(doc, fp, indent=2, sort_keys=True)
        fp.write("\n")


def _emit_config(args, command: str) -> None:
    if args.out:
        _write_json(f"{args.out}.config.json", _resolved_config(args, command))


def _apply_config(parser: argparse.ArgumentParser, sub_by_name: dict,
                  argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config) as fp:
            doc = json.load(fp)
        cmd = doc.pop("command", args.command)
        if cmd != args.command:
            raise UsageError(
                f"config is for '{cmd}', invoked subcommand is '{args.command}'")
        sub = sub_by_name[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**doc)
        args = parser.parse_args(argv)
    return args


# --- subcommands -------------------------------------------------------------

def cmd_soup_sample(args) -> None:
    spec = _soup_spec(args)
    _need(args, "out")
    shapes = sample_soup(spec)
    _emit_config(args, "soup-sample")
    with open(f"{args.out}.csv", "w", newline="") as fp:
        write_csv(shapes, fp)
    _write_json(f"{args.out}.json", to_json_obj(shapes))
    if args.svg:
        with open(f"{args.out}.svg", "w") as fp:
            fp.write(svg_mod.shapes_svg(shapes, spec.window))
        h = args.h if args.h is not None else spec.dia_min / 4.0
        grid = rasterize(shapes, spec.window, h)
        with open(f"{args.out}.components.svg", "w") as fp:
            fp.write(svg_mod.grid_svg(grid, _ADJS[args.adjacency or "face"]))
    print(f"{shapes.n} shapes -> {args.out}.csv")


def cmd_crossing(args) -> None:
    model = _model(args)
    espec = EventSpec(model, _event(args, model))
    est = mc_estimate(espec, args.n, args.seed, args.level, args.threads)
    doc = estimate_to_json_obj(espec, est)
    if args.out:
        _emit_config(args, "crossing")
        _write_json(f"{args.out}.json", doc)
    else:
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()


def cmd_sweep(args) -> None:
    model = _model(args)
    espec = EventSpec(model, _event(args, model))
    _need(args, "params", "out")
    grid = _floats(args.params, "--params")
    res = sweep(espec, grid, args.n, args.seed, coupled=not args.uncoupled,
                level=args.level, threads=args.threads)
    _emit_config(args, "sweep")
    with open(f"{args.out}.csv", "w", newline="") as fp:
        res.write_csv(fp)
    if args.svg:
        with open(f"{args.out}.svg", "w") as fp:
            fp.write(svg_mod.sweep_svg(res))
    print(f"{len(grid)} points -> {args.out}.csv")


def cmd_epsilon_scan(args) -> None:
    if args.model != "soup":
        raise UsageError("the resolution scan applies to soup models")
    model = _model(args)
    espec = EventSpec(model, _event(args, model))
    _need(args, "eps", "out")
    eps = _floats(args.eps, "--eps")
    res = epsilon_scan(espec, eps, args.n, args.seed, args.level, args.threads)
    _emit_config(args, "epsilon-scan")
    with open(f"{args.out}.csv", "w", newline="") as fp:
        res.write_csv(fp)
    if args.svg:
        with open(f"{args.out}.svg", "w") as fp:
            fp.write(svg_mod.sweep_svg(res))
    print(f"{len(eps)} cutoffs -> {args.out}.csv")


def cmd_bisect(args) -> None:
    model = _model(args)
    espec = EventSpec(model, _event(args, model))
    _need(args, "lo", "hi")
    res = bisect_critical(espec, args.lo, args.hi, theta=args.theta,
                          n_per_eval=args.n, max_evals=args.max_evals,
                          width_tol=args.width_tol, seed=args.seed,
                          level=args.level, threads=args.threads)
    doc = event_spec_to_dict(espec)
    doc.update({
        "param_lo": res.param_lo,
        "param_hi": res.param_hi,
        "theta": res.theta,
        "direction": res.direction,
        "status": res.status,
        "evaluations": [
            {"param": x, "p_hat": e.p_hat, "ci": [e.ci_lo, e.ci_hi], "n": e.n}
            for x, e in res.evaluations
        ],
        "seed": args.seed,
    })
    if args.out:
        _emit_config(args, "bisect")
        _write_json(f"{args.out}.json", doc)
        if args.svg:
            with open(f"{args.out}.svg", "w") as fp:
                fp.write(svg_mod.bisect_svg(res))
    print(f"{res.status}: [{res.param_lo!r}, {res.param_hi!r}]")


def cmd_fractal_exact(args) -> None:
    _need(args, "N", "p", "depth")
    prob = exact_crossing_prob(N=args.N, dim=args.dim, depth=args.depth,
                               p=args.p, axis=args.axis,
                               adj=_ADJS[args.adjacency or "vertex"])
    if args.out:
        _emit_config(args, "fractal-exact")
        _write_json(f"{args.out}.json", {
            "N": args.N, "dim": args.dim, "depth": args.depth, "p": args.p,
            "axis": args.axis, "adjacency": args.adjacency or "vertex",
            "prob": prob,
        })
    print(repr(prob))


def cmd_renorm(args) -> None:
    _need(args, "s", "extent", "out")
    soup_spec = _soup_spec(args)
    spec = renorm_mod.RenormSpec(
        shell=_shell(args, args.dim),
        s=args.s,
        lattice_extent=_ints(args.extent, "--extent"),
        soup_spec=soup_spec,
    )
    fields = renorm_mod.sample_fields(
        spec, args.n, args.seed, h=args.h,
        adjacency=_ADJS[args.adjacency or "face"], threads=args.threads)
    _emit_config(args, "renorm")
    with open(f"{args.out}.csv", "w", newline="") as fp:
        renorm_mod.write_field_csv(fields, fp)
    _write_json(f"{args.out}.json", renorm_mod.field_summary(fields))
    print(f"{args.n} fields -> {args.out}.csv")


# --- parser ------------------------------------------------------------------

def _add_common(sub) -> None:
    sub.add_argument("--config", help="JSON file of defaults for this subcommand")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", help="output path prefix")
    sub.add_argument("--threads", type=int, default=1)


def _add_soup_flags(sub) -> None:
    sub.add_argument("--dim", type=int)
    sub.add_argument("--lambda", dest="intensity", type=float)
    sub.add_argument("--kind", choices=sorted(_KINDS), default="ball")
    sub.add_argument("--dia-min", type=float)
    sub.add_argument("--dia-max", type=float)
    sub.add_argument("--window", help="2*dim floats: lo coords then hi coords")
    sub.add_argument("--mode", choices=sorted(_MODES), default="full")


def _add_model_flags(sub) -> None:
    _add_soup_flags(sub)
    sub.add_argument("--model", choices=["soup", "fractal"], default="soup")
    sub.add_argument("--h", type=float, help="raster cell size (soup)")
    sub.add_argument("--N", type=int, help="subdivision factor (fractal)")
    sub.add_argument("--p", type=float, help="retention probability (fractal)")
    sub.add_argument("--depth", type=int, help="recursion depth (fractal)")
    sub.add_argument("--corner-anchored", action="store_true")
    sub.add_argument("--adjacency", choices=sorted(_ADJS))


def _add_event_flags(sub) -> None:
    sub.add_argument("--event", choices=["shell", "box", "circuit", "diameter"],
                     default="shell")
    sub.add_argument("--shell-outer", help="2*dim floats: lo then hi")
    sub.add_argument("--shell-inner", help="2*dim floats: lo then hi")
    sub.add_argument("--box", help="2*dim floats: lo then hi")
    sub.add_argument("--axis", type=int, default=0)
    sub.add_argument("--threshold", type=float, help="diameter threshold")


def _add_mc_flags(sub) -> None:
    sub.add_argument("--n", type=int, default=1000, help="trial count")
    sub.add_argument("--level", type=float, default=0.95)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="fracperc",
        description="Shape-soup and recursive-retention percolation experiments")
    subs = parser.add_subparsers(dest="command", required=True)
    by_name = {}

    sub = subs.add_parser("soup-sample", help="draw one soup realization")
    _add_common(sub)
    _add_soup_flags(sub)
    sub.add_argument("--h", type=float)
    sub.add_argument("--adjacency", choices=sorted(_ADJS))
    sub.add_argument("--svg", action="store_true")
    sub.set_defaults(func=cmd_soup_sample)
    by_name["soup-sample"] = sub

    sub = subs.add_parser("crossing", help="estimate one event probability")
    _add_common(sub)
    _add_model_flags(sub)
    _add_event_flags(sub)
    _add_mc_flags(sub)
    sub.set_defaults(func=cmd_crossing)
    by_name["crossing"] = sub

    sub = subs.add_parser("sweep", help="estimate along a parameter grid")
    _add_common(sub)
    _add_model_flags(sub)
    _add_event_flags(sub)
    _add_mc_flags(sub)
    sub.add_argument("--params", help="ascending grid of lambda or p values")
    sub.add_argument("--uncoupled", action="store_true",
                     help="independent estimates instead of shared randomness")
    sub.add_argument("--svg", action="store_true")
    sub.set_defaults(func=cmd_sweep)
    by_name["sweep"] = sub

    sub = subs.add_parser("epsilon-scan",
                          help="estimate as the diameter cutoff shrinks")
    _add_common(sub)
    _add_model_flags(sub)
    _add_event_flags(sub)
    _add_mc_flags(sub)
    sub.add_argument("--eps", help="descending diameter cutoffs")
    sub.add_argument("--svg", action="store_true")
    sub.set_defaults(func=cmd_epsilon_scan)
    by_name["epsilon-scan"] = sub

    sub = subs.add_parser("bisect", help="bracket a critical parameter")
    _add_common(sub)
    _add_model_flags(sub)
    _add_event_flags(sub)
    _add_mc_flags(sub)
    sub.add_argument("--lo", type=float)
    sub.add_argument("--hi", type=float)
    sub.add_argument("--theta", type=float, default=0.05)
    sub.add_argument("--max-evals", type=int, default=12)
    sub.add_argument("--width-tol", type=float, default=0.0)
    sub.add_argument("--svg", action="store_true")
    sub.set_defaults(func=cmd_bisect)
    by_name["bisect"] = sub

    sub = subs.add_parser("fractal-exact",
                          help="exact crossing probability by enumeration")
    _add_common(sub)
    sub.add_argument("--N", type=int)
    sub.add_argument("--dim", type=int, default=2)
    sub.add_argument("--p", type=float)
    sub.add_argument("--depth", type=int, default=1)
    sub.add_argument("--axis", type=int, default=0)
    sub.add_argument("--adjacency", choices=sorted(_ADJS))
    sub.set_defaults(func=cmd_fractal_exact)
    by_name["fractal-exact"] = sub

    sub = subs.add_parser("renorm", help="sample the renormalized lattice field")
    _add_common(sub)
    _add_soup_flags(sub)
    sub.add_argument("--shell-outer", help="template shell outer box")
    sub.add_argument("--shell-inner", help="template shell inner box")
    sub.add_argument("--s", type=float, help="shrink factor")
    sub.add_argument("--extent", help="lattice sites per axis")
    sub.add_argument("--h", type=float)
    sub.add_argument("--adjacency", choices=sorted(_ADJS))
    sub.add_argument("--n", type=int, default=1000, help="field count")
    sub.set_defaults(func=cmd_renorm)
    by_name["renorm"] = sub

    return parser, by_name


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, by_name = build_parser()
    t0 = time.perf_counter()
    try:
        args = _apply_config(parser, by_name, argv)
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FracpercError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    finally:
        print(f"wall_time_s {time.perf_counter() - t0:.3f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
