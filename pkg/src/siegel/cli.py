"""Command-line front door.

    siegel analyze "[;1]" --out results/
    siegel sweep 1 24
    siegel render "[;1]" --figure filled-julia --window -0.4,0,2.6,2.6 --res 256x256

Every option can also come from a key=value config file (``--config FILE``);
keys are the long option names without the dashes (``max-q`` or ``max_q``),
``theta`` supplies the continued fraction, ``#`` starts a comment and
booleans are true/false.  Flags on the command line win over the file.

Exit codes: 0 analysis completed (whatever the verdicts), 2 bad input or
configuration, 3 precision exhausted, 4 lambda estimate did not converge
(the partial report is still written), 5 output not writable.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cfrac import alpha, parse_cf, parse_cf_text
from .dynamics import DEFAULT_PRECISION, critical_orbit, make_params
from .errors import InvalidConfigError, OutputError, SiegelError
from .geometry import PointCloud, blow_up
from .pipeline import DEFAULT_DECAY_LEVELS, DEFAULT_MAX_Q, AnalysisConfig, analyze, orbit_length
from .render import (Window, parse_resolution, render_blowup_overlay, render_boundary_orbit,
                     render_filled_julia, render_log_chart)
from .report import analysis_json, num, sweep_json, write_json
from .scaling import DEFAULT_CONVERGENCE_TOL, DEFAULT_TOL_ARG, estimate_lambda, modulus_M, triangle_criterion

log = logging.getLogger("siegel")

FIGURES = ("filled-julia", "boundary", "log-chart", "blowup-overlay")
RENDER_MAX_Q = 200_000
EXIT_NONCONVERGENCE = 4

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


# -- config file -------------------------------------------------------------------


def read_config(path) -> dict[str, str]:
    """Parse key=value lines.  Keys are normalised to underscores."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, args_list: list[str], values: dict[str, str]):
    """Feed config values in as parser defaults so explicit flags still win."""
    known = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, value in values.items():
        dest = "cf" if key == "theta" else key
        if dest not in known or dest in ("help", "config", "command"):
            raise InvalidConfigError(f"unknown config key {key!r}")
        action = known[dest]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            if value.lower() not in _BOOL:
                raise InvalidConfigError(f"{key} must be true or false")
            defaults[dest] = _BOOL[value.lower()]
        else:
            defaults[dest] = value  # argparse runs type= on string defaults
    parser.set_defaults(**defaults)
    return parser.parse_args(args_list)


# -- sweep --------------------------------------------------------------------------


@dataclass
class SweepRow:
    a: int
    alpha: str
    alpha_exact: str
    M: str
    triangle: str
    margin: str


def sweep(a_min: int, a_max: int, precision_bits: int = 128) -> list[SweepRow]:
    """Triangle criterion for theta = [;a], a_min <= a <= a_max."""
    if not 1 <= a_min <= a_max:
        raise InvalidConfigError("need 1 <= a_min <= a_max")
    rows = []
    for a in range(a_min, a_max + 1):
        const = alpha(parse_cf((), (a,)))
        M = modulus_M(const.alpha, precision_bits)
        verdict = triangle_criterion(M)
        rows.append(SweepRow(a, num(const.alpha.to_mpfr(precision_bits)), str(const.alpha), num(M),
                             verdict.outcome.value, num(verdict.margin)))
    return rows


def _flip(rows: list[SweepRow]) -> tuple[int, int] | None:
    for r0, r1 in zip(rows, rows[1:]):
        if r0.triangle != r1.triangle:
            return r0.a, r1.a
    return None


def format_sweep(rows: list[SweepRow]) -> str:
    lines = [f"{'a':>4}  {'alpha':<22}  {'M':<22}  triangle"]
    for r in rows:
        lines.append(f"{r.a:>4}  {r.alpha[:22]:<22}  {r.M[:22]:<22}  {r.triangle}")
    flip = _flip(rows)
    if flip:
        lines.append(f"verdict flips between a={flip[0]} and a={flip[1]}")
    return "\n".join(lines)


# -- commands ----------------------------------------------------------------------


def _analysis_config(args) -> AnalysisConfig:
    if not args.cf:
        raise InvalidConfigError("no continued fraction given (argument or theta= in config)")
    return AnalysisConfig(args.cf, args.precision, args.max_q, args.levels, args.decay_levels,
                          args.ladder, args.tol, args.tol_arg)


def _orbit_window(offsets: np.ndarray, origin: complex, pad: float = 1.1) -> Window:
    pts = origin + offsets
    lo = complex(pts.real.min(), pts.imag.min())
    hi = complex(pts.real.max(), pts.imag.max())
    side = max(hi.real - lo.real, hi.imag - lo.imag) * pad
    return Window((lo + hi) / 2, side, side)


def _chi_window(offsets: np.ndarray) -> Window:
    r = np.abs(offsets[offsets != 0])
    lo, hi = float(np.log(r.min())), float(np.log(r.max()))
    return Window(complex((lo + hi) / 2, 0), max(hi - lo, 1e-3) * 1.05, 2 * math.pi * 1.05)


def cmd_analyze(args) -> int:
    config = _analysis_config(args)
    theta = parse_cf_text(config.theta_cf)
    result = analyze(theta, config)
    out = Path(args.out)
    path = write_json(out / "report.json", analysis_json(result))
    rep = result.report
    print(f"theta   {theta.cf_text} = {theta.surd}")
    print(f"alpha   {rep.alpha_exact} ~ {float(rep.alpha):.12g}  (s={rep.s}, N={rep.N})")
    print(f"M       {float(rep.M):.12g}  triangle={rep.triangle_ok.outcome.value}")
    lam = complex(rep.lambda_est)
    print(f"lambda  {lam.real:.10g}{lam.imag:+.10g}i  |lambda|={abs(lam):.10g}  err={float(rep.lambda_err):.3g}")
    print(f"bound   {rep.bound_ok.outcome.value}  torus={rep.torus_ineq_ok.outcome.value}  spiral={rep.spiral.kind}")
    if result.decay is not None:
        d = result.decay
        print(f"decay   slope={d.slope:.4g} residual={d.residual:.3g} -> {d.decay_ok.outcome.value}")
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.figures:
        _analysis_figures(result, out, tuple(args.res))
    print(f"report  {path}")
    if not result.converged:
        print("error: lambda estimate did not converge; partial report written", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return 0


def _analysis_figures(result, out: Path, res: tuple[int, int]) -> None:
    orbit = result.orbit
    params = orbit.params
    origin = complex(orbit.origin)
    meta_cfg = {"theta": result.theta.cf_text, "max_index": orbit.max_index}
    img = render_boundary_orbit(params, orbit, _orbit_window(orbit.stream, origin), res)
    img.meta["config"] = meta_cfg
    img.write_ppm(out / "boundary.ppm")
    radius = float(abs(orbit.delta(2))) if len(orbit.closest_returns) >= 2 else None
    img = render_log_chart(params, orbit, _chi_window(orbit.stream), res, radius=radius)
    img.meta["config"] = meta_cfg
    img.write_ppm(out / "log-chart.ppm")
    if result.decay is not None:
        lam = result.report.lambda_est
        clouds = [PointCloud.from_orbit(orbit)]
        for _ in range(2):
            clouds.append(blow_up(clouds[-1], lam, result.theta.s))
        w = result.decay.window
        img = render_blowup_overlay(clouds, Window(origin, 2 * w, 2 * w), res, params)
        img.meta["config"] = meta_cfg
        img.write_ppm(out / "blowup-overlay.ppm")


def cmd_sweep(args) -> int:
    rows = sweep(args.a_min, args.a_max, args.precision)
    print(format_sweep(rows))
    if args.json:
        write_json(args.json, sweep_json(rows))
    return 0


def cmd_render(args) -> int:
    if not args.cf:
        raise InvalidConfigError("no continued fraction given")
    if args.threads < 1:
        raise InvalidConfigError("threads must be >= 1")
    theta = parse_cf_text(args.cf)
    res = tuple(args.res)
    window = Window.parse(args.window) if args.window else None
    params = make_params(theta, args.precision)
    kind = args.figure
    if kind == "filled-julia":
        if window is None:
            raise InvalidConfigError("filled-julia needs --window")
        img = render_filled_julia(params, window, res, args.max_iter, args.escape_radius, args.threads)
    else:
        max_index = args.max_index or orbit_length(theta, args.max_q, None)
        orbit = critical_orbit(params, max_index)
        origin = complex(orbit.origin)
        if kind == "boundary":
            img = render_boundary_orbit(params, orbit, window or _orbit_window(orbit.stream, origin), res)
        elif kind == "log-chart":
            radius = args.radius
            if radius is None and len(orbit.closest_returns) >= 2:
                radius = float(abs(orbit.delta(2)))
            img = render_log_chart(params, orbit, window or _chi_window(orbit.stream), res, radius=radius)
        else:
            est = estimate_lambda(orbit, theta.s, theta.N)
            clouds = [PointCloud.from_orbit(orbit)]
            for _ in range(args.blowups):
                clouds.append(blow_up(clouds[-1], est.lambda_est, theta.s))
            if window is None:
                w = 2 * float(abs(orbit.delta(theta.N))) / abs(complex(est.lambda_est))
                window = Window(origin, w, w)
            img = render_blowup_overlay(clouds, window, res, params)
            img.meta["blowups"] = args.blowups
        img.meta["max_index"] = max_index
    out = Path(args.out or f"{kind}.ppm")
    if args.png:
        img.write_png(out.with_suffix(".png"))
    img.write_ppm(out)
    print(f"wrote {out}")
    return 0


# -- parser ------------------------------------------------------------------------


def _resolution(text: str):
    return parse_resolution(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="siegel", description="Siegel disk self-similarity toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full analysis of one angle")
    p.add_argument("cf", nargs="?", help='continued fraction, e.g. "[;1]" or "[2;2,1]"')
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION, help="working precision in bits")
    p.add_argument("--max-q", type=int, default=DEFAULT_MAX_Q, help="largest closest-return time iterated")
    p.add_argument("--levels", type=int, default=None, help="number of lambda levels (default: all within max-q)")
    p.add_argument("--decay-levels", type=int, default=DEFAULT_DECAY_LEVELS, help="blow-up levels for the decay fit")
    p.add_argument("--ladder", action="store_true", help="rerun at +64 bits and compare")
    p.add_argument("--tol", type=float, default=DEFAULT_CONVERGENCE_TOL, help="lambda_err convergence tolerance")
    p.add_argument("--tol-arg", type=float, default=DEFAULT_TOL_ARG, help="spiral test argument tolerance (rad)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--figures", action="store_true", help="also write boundary, log-chart and overlay figures")
    p.add_argument("--res", type=_resolution, default=(256, 256), help="figure resolution WxH")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="triangle criterion for theta=[;a]")
    p.add_argument("a_min", type=int)
    p.add_argument("a_max", type=int)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--precision", type=int, default=128)
    p.add_argument("--json", help="also write the rows as JSON to this path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="draw a figure")
    p.add_argument("cf", nargs="?")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--figure", choices=FIGURES, default="filled-julia")
    p.add_argument("--window", help="cx,cy,w,h in the plane of the figure")
    p.add_argument("--res", type=_resolution, default=(256, 256), help="WxH")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--escape-radius", type=float, default=2.0)
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    p.add_argument("--max-q", type=int, default=RENDER_MAX_Q, help="orbit length cap for orbit figures")
    p.add_argument("--max-index", type=int, default=None, help="exact orbit length for orbit figures")
    p.add_argument("--radius", type=float, default=None, help="log-chart spread radius (default |delta_2|)")
    p.add_argument("--blowups", type=int, default=2, help="blow-up levels in the overlay")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="output .ppm path")
    p.add_argument("--png", action="store_true", help="also write a PNG (needs Pillow)")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "config", None):
            sub = parser._subparsers._group_actions[0].choices[args.command]
            try:
                args = _apply_config(sub, argv[argv.index(args.command) + 1:], read_config(args.config))
            except SystemExit as exc:
                return int(exc.code or 0)
        return args.func(args)
    except SiegelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return OutputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
