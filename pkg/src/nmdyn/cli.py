"""Command-line front end: ``nmdyn <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 numerical failure
or tolerance breach.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .born import born_rates, born_sigma
from .classify import (
    DEFAULT_DE_RANGE,
    DEFAULT_GAMMA_RANGE,
    DEFAULT_SHAPE,
    ConvergenceError,
    axis_values,
    closeness_map,
    discrepancy_report,
    grid_rates,
    region_map,
    triple_point,
)
from .exact import exact_amplitudes, exact_rates
from .model import InitialState, ModelConfig, ReservoirSpec, SystemSpec, ValidationError, load_config
from .oracle import BudgetError, oracle_report
from .redfield import gksl_rates, redfield_amplitudes, redfield_rates

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
METHODS = ("exact", "born", "redfield", "gksl")
GRID_MIN, GRID_MAX = 2, 2000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; we reserve 2 for invalid input."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- argument types -------------------------------------------------------------


def _positive(text: str) -> float:
    x = float(text)
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return x


def _non_negative(text: str) -> float:
    x = float(text)
    if not (x >= 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return x


def parse_grid(text: str) -> tuple[int, int]:
    try:
        a, b = (int(s) for s in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like NxM, got {text!r}") from None
    for k in (a, b):
        if not GRID_MIN <= k <= GRID_MAX:
            raise argparse.ArgumentTypeError(f"grid resolution must be in {GRID_MIN}..{GRID_MAX}, got {k}")
    return a, b


def parse_range(text: str) -> tuple[float, float]:
    try:
        a, b = (float(s) for s in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must look like a:b, got {text!r}") from None
    if not a < b:
        raise argparse.ArgumentTypeError(f"range must be increasing, got {text!r}")
    return a, b


def parse_times(text: str) -> list[float]:
    return [_non_negative(s) for s in text.split(",") if s.strip()]


# --- helpers --------------------------------------------------------------------


def _emit(doc: dict, out) -> None:
    if out is None:
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        io.write_json(out, doc)


def _load(args) -> ModelConfig:
    if args.config is None:
        raise UsageError("--config is required for this command")
    if not Path(args.config).is_file():
        raise ValidationError(f"config file not found: {args.config}")
    return load_config(args.config)


def _time_grid(t_max: float, dt: float) -> np.ndarray:
    steps = int(round(t_max / dt))
    if steps < 1:
        raise ValidationError("--t-max must be at least one --dt")
    if steps > 10_000_000:
        raise ValidationError("time grid too large")
    return np.arange(steps + 1) * dt


def trajectory(cfg: ModelConfig, method: str, times) -> io.TimeSeries:
    """Global-basis, interaction-picture trajectory of ``method``."""
    basis = cfg.basis()
    state, res = cfg.initial, cfg.reservoir
    if method in ("exact", "born"):
        psi = exact_amplitudes(state, basis, res, times)
        if method == "exact":
            sigma = np.einsum("ta,tb->tab", psi, psi.conj())
        else:
            sigma = born_sigma(state, basis, res, times)
    elif method in ("redfield", "gksl"):
        psi = redfield_amplitudes(state, basis, res, times, markovian=(method == "gksl"))
        sigma = np.einsum("ta,tb->tab", psi, psi.conj())
    else:
        raise ValidationError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    rho00 = 1.0 - np.einsum("taa->t", sigma).real
    return io.TimeSeries(method, np.asarray(times, float), psi, sigma, rho00)


def _grid_axes(args):
    nd, ng = args.grid
    de = axis_values(args.de_range[0], args.de_range[1], nd)
    lo, hi = args.gamma_range
    if hi <= 0:
        raise ValidationError("--gamma-range must reach positive values")
    # the width axis excludes its lower end when it starts at zero
    gm = axis_values(lo, hi, ng, open_left=(lo <= 0))
    return de, gm


def _svg_path(args) -> Path:
    if args.svg is not None:
        return Path(args.svg)
    return Path(args.out).with_suffix(".svg")


# --- commands -------------------------------------------------------------------


def cmd_rates(args) -> int:
    cfg = _load(args)
    basis = cfg.basis()
    res = cfg.reservoir
    at = {t: redfield_rates(basis, res, t) for t in args.at}
    doc = io.rates_document(exact_rates(basis, res), born_rates(basis, res), gksl_rates(basis, res), at)
    doc["version"] = __version__
    _emit(doc, args.out)
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _load(args)
    times = _time_grid(args.t_max, args.dt)
    ts = trajectory(cfg, args.method, times)
    meta = {
        "method": args.method,
        "params": cfg.to_dict(),
        "t_max": args.t_max,
        "dt": args.dt,
        "basis": "global",
        "picture": "interaction",
        "version": __version__,
    }
    text = io.format_series(ts, meta)
    if args.out is None:
        sys.stdout.write(text)
    else:
        io.atomic_write(args.out, text)
    return EXIT_OK


def cmd_classify(args) -> int:
    de, gm = _grid_axes(args)
    rmap = region_map(de, gm, jobs=args.jobs)
    if args.format == "svg":
        if args.out is None:
            sys.stdout.write(io.region_svg(rmap))
        else:
            io.atomic_write(args.out, io.region_svg(rmap))
    else:
        text = io.format_region_csv(rmap.cells())
        if args.out is None:
            sys.stdout.write(text)
        else:
            io.atomic_write(args.out, text)
            io.atomic_write(_svg_path(args), io.region_svg(rmap))
    report = discrepancy_report(rmap)
    print(
        f"predicate vs direct: {report['disagree']} of {report['cells']} cells disagree "
        f"({report['boundary_cells']} boundary)",
        file=sys.stderr,
    )
    if args.report is not None:
        io.write_json(args.report, report)
    return EXIT_OK


def cmd_closeness(args) -> int:
    de, gm = _grid_axes(args)
    mask = closeness_map(de, gm, tolerance=args.tolerance, pair=args.pair, jobs=args.jobs)
    svg = io.closeness_svg(de, gm, mask, args.pair, args.tolerance)
    if args.format == "svg":
        if args.out is None:
            sys.stdout.write(svg)
        else:
            io.atomic_write(args.out, svg)
    else:
        text = io.format_closeness_csv(de, gm, mask)
        if args.out is None:
            sys.stdout.write(text)
        else:
            io.atomic_write(args.out, text)
            io.atomic_write(_svg_path(args), svg)
    print(f"{args.pair}: {int(mask.sum())} of {mask.size} cells within tolerance {args.tolerance:g}", file=sys.stderr)
    return EXIT_OK


def _default_verify_config() -> ModelConfig:
    # one level detuned by g from the peak, gamma = 2 g
    return ModelConfig(SystemSpec([[1.0]]), ReservoirSpec(1.0, 2.0, 0.0), InitialState(0.0, np.array([1.0])))


def cmd_verify(args) -> int:
    cfg = _load(args) if args.config is not None else _default_verify_config()
    report = oracle_report(
        cfg.initial, cfg.system, cfg.reservoir,
        modes=args.modes, half_width=args.half_width, t_max=args.t_max,
        tolerance=args.tolerance if args.tolerance is not None else 1e-2,
    )
    _emit(report, args.out)
    return EXIT_OK if report["pass"] else EXIT_NUMERIC


def cmd_triple_point(args) -> int:
    p, q = triple_point()
    _emit({"points": [list(p), list(q)], "columns": ["dE_over_g", "gamma_over_g"]}, args.out)
    return EXIT_OK


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nmdyn", description="Exact and approximate dynamics of a level system in a Lorentzian reservoir.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def common(p, config=True):
        if config:
            p.add_argument("--config", metavar="PATH", help="model JSON (see README for the schema)")
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        return p

    p = common(sub.add_parser("rates", help="decay rates of every method as JSON"))
    p.add_argument("--at", type=parse_times, default=[], metavar="T1,T2,...",
                   help="times at which to report Redfield rates (default: none)")
    p.set_defaults(func=cmd_rates)

    p = common(sub.add_parser("evolve", help="time-series CSV of the reduced state"))
    p.add_argument("--method", choices=METHODS, default="exact", help="dynamics to integrate (default: exact)")
    p.add_argument("--t-max", type=_positive, default=10.0, help="final time (default: 10)")
    p.add_argument("--dt", type=_positive, default=0.1, help="output spacing (default: 0.1)")
    p.set_defaults(func=cmd_evolve)

    for name, func, text in (
        ("classify", cmd_classify, "region map of population-rate orderings"),
        ("closeness", cmd_closeness, "cells where an approximate rate is close to the exact one"),
    ):
        p = common(sub.add_parser(name, help=text), config=False)
        p.add_argument("--grid", type=parse_grid, default=DEFAULT_SHAPE, metavar="NxM",
                       help="cells along dE/g and gamma/g (default: %dx%d)" % DEFAULT_SHAPE)
        p.add_argument("--de-range", type=parse_range, default=DEFAULT_DE_RANGE, metavar="a:b",
                       help="dE/g range (default: -3:3)")
        p.add_argument("--gamma-range", type=parse_range, default=DEFAULT_GAMMA_RANGE, metavar="a:b",
                       help="gamma/g range, lower end excluded when 0 (default: 0:8)")
        p.add_argument("--format", choices=("csv", "svg"), default="csv",
                       help="csv writes the table and an SVG next to it; svg writes only the figure")
        p.add_argument("--svg", metavar="PATH", help="SVG path when --format csv (default: --out with .svg)")
        p.add_argument("--jobs", type=int, default=1, help="worker threads for the grid (default: 1)")
        p.set_defaults(func=func)
        if name == "classify":
            p.add_argument("--report", metavar="PATH", help="also write the predicate discrepancy report as JSON")
        else:
            p.add_argument("--tolerance", type=_non_negative, default=0.15,
                           help="relative closeness threshold (default: 0.15)")
            p.add_argument("--pair", choices=("exact-vs-born", "exact-vs-gksl"), default="exact-vs-born")

    p = common(sub.add_parser("verify", help="compare the pseudomode solution with a discretized bath"))
    p.add_argument("--modes", type=int, default=2000, help="bath modes per level (default: 2000)")
    p.add_argument("--half-width", type=_positive, default=None, help="bath half-width W (default: 40 gamma)")
    p.add_argument("--t-max", type=_positive, default=None, help="comparison window (default: 5/gamma)")
    p.add_argument("--tolerance", type=_positive, default=None, help="sup-error bound (default: 1e-2)")
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("triple-point", help="points where all three population rates coincide"), config=False)
    p.set_defaults(func=cmd_triple_point)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        ap.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        ap.error(str(exc))
    except (ValidationError, BudgetError, OSError) as exc:
        print(f"nmdyn: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"nmdyn: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"nmdyn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
