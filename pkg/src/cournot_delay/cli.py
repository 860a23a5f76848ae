"""Command-line front end: tables, spectra, sweeps and trajectories as CSV."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields

import numpy as np

from . import crossing, dde, spectrum, verify
from .linearization import closed_form_coeffs
from .model import ModelParams, ParameterError, equilibrium

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3

PARAM_NAMES = [f.name for f in fields(ModelParams)]
CLASSIFY_HEADER = ["mu", "class", "omega0", "tau_star", "transversal"]
SWEEP_HEADER = CLASSIFY_HEADER + ["x1", "x2", "z1", "z2", "error"]
SPECTRUM_HEADER = ["re", "im", "residual"]
TRAJECTORY_HEADER = ["t", "x1", "x2", "z1", "z2"]


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(value) -> str:
    """CSV cell: 12 significant digits in positional notation, blanks for missing."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0.0:
        return "0"
    return np.format_float_positional(v, precision=12, unique=False, fractional=False, trim="-")


def float_list(text: str, n: int | None = None, name: str = "value") -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse {name} {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"{name} needs {n} comma-separated numbers, got {text!r}")
    return vals


def parse_region(text: str) -> list[float]:
    return float_list(text, 4, "region")


def parse_grid(text: str) -> list[int]:
    vals = float_list(text, 2, "grid")
    if any(v != int(v) or v < 16 for v in vals):
        raise argparse.ArgumentTypeError("grid counts must be integers >= 16")
    return [int(v) for v in vals]


def parse_perturbation(text: str) -> list[float]:
    return float_list(text, 4, "perturbation")


def parse_mu_grid(text: str) -> list[float]:
    """``start:stop:count[:log]`` or a comma-separated list of values."""
    text = text.strip()
    if not text:
        return []
    if ":" not in text:
        return float_list(text, name="mu grid")
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
        raise argparse.ArgumentTypeError(f"mu grid must be start:stop:count[:log], got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse mu grid {text!r}") from None
    if count < 0:
        raise argparse.ArgumentTypeError("mu grid count must be non-negative")
    if len(parts) == 4:
        if start <= 0 or stop <= 0:
            raise argparse.ArgumentTypeError("log mu grid needs positive endpoints")
        return [float(v) for v in np.geomspace(start, stop, count)]
    return [float(v) for v in np.linspace(start, stop, count)]


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (t.strip() for t in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def build_parser() -> Parser:
    common = Parser(add_help=False, allow_abbrev=False)
    g = common.add_argument_group("model parameters (default: baseline)")
    for name in PARAM_NAMES:
        g.add_argument(f"--{name}", type=float, default=None, metavar="X")
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--out", help="CSV destination (default: stdout)")

    parser = Parser(prog="cournot-delay", description=__doc__, allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    parser.commands = {}

    def add(name, help_text):
        parser.commands[name] = sub.add_parser(name, parents=[common], help=help_text, allow_abbrev=False)
        return parser.commands[name]

    p = add("equilibrium", "interior equilibrium")
    p.add_argument("--mu-grid", type=parse_mu_grid)

    p = add("classify", "delay-stability class, crossing frequency and critical delay")
    p.add_argument("--mu-grid", type=parse_mu_grid)

    p = add("critical-delay", "all crossing frequencies and their delay branches")
    p.add_argument("--branches", type=int, default=None)

    p = add("spectrum", "characteristic roots in a rectangle")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--region", type=parse_region, help="re_min,re_max,im_min,im_max")
    p.add_argument("--grid", type=parse_grid, help="n_re,n_im")
    p.add_argument("--rightmost", action="store_true", help="report only the rightmost root")

    p = add("simulate", "integrate the delayed dynamics")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--perturb", type=parse_perturbation, default=None,
                   help="relative perturbation of the constant history (default 0.1,0,0,0)")

    p = add("sweep", "equilibrium and classification over a grid of cost ratios")
    p.add_argument("--mu-grid", type=parse_mu_grid)
    p.add_argument("--workers", type=int, default=None)

    p = add("verify", "run the acceptance checklist")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--check", action="append", default=None, help="run only the named check")
    return parser


def _apply_config(parser: Parser, args: argparse.Namespace) -> None:
    if not args.config:
        return
    actions = {a.dest: a for a in parser.commands[args.command]._actions}
    for key, text in read_config(args.config).items():
        if key in ("config", "command", "help") or key not in actions:
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) is not None and getattr(args, key) is not False:
            continue
        action = actions[key]
        if action.type is None and action.const is True:
            setattr(args, key, text.lower() in ("1", "true", "yes", "on"))
            continue
        try:
            setattr(args, key, action.type(text) if action.type else text)
        except (argparse.ArgumentTypeError, ValueError) as err:
            raise UsageError(f"config key {key!r}: {err}") from None


def params_from(args, mu: float | None = None) -> ModelParams:
    values = {n: getattr(args, n) for n in PARAM_NAMES if getattr(args, n) is not None}
    if mu is not None:
        values["mu"] = mu
    return ModelParams(**values)


class Output:
    """CSV goes to ``--out`` (summary to stdout) or to stdout (summary to stderr)."""

    def __init__(self, path: str | None):
        self.path = path
        self.buffer = io.StringIO()
        self.writer = csv.writer(self.buffer, lineterminator="\n")
        self.notes = sys.stdout if path else sys.stderr

    def header(self, names):
        self.writer.writerow(names)

    def row(self, values):
        self.writer.writerow([fmt(v) for v in values])

    def say(self, text: str):
        print(text, file=self.notes)

    def close(self):
        if self.path:
            with open(self.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(self.buffer.getvalue())
        else:
            sys.stdout.write(self.buffer.getvalue())


def _classify_fields(report: crossing.CrossingReport):
    crit = report.critical_crossing()
    if crit is None:
        return [str(report.stability_class), None, None, None]
    return [str(report.stability_class), crit.omega, report.critical_delay, crit.transversality]


def _mu_values(args) -> list[float] | None:
    grid = getattr(args, "mu_grid", None)
    if grid is None:
        return None
    if not grid:
        raise UsageError("mu grid is empty")
    return grid


def run_equilibrium(args, out: Output) -> int:
    mus = _mu_values(args) or [params_from(args).mu]
    out.header(["mu", "x1", "x2", "z1", "z2"])
    for mu in mus:
        eq = equilibrium(params_from(args, mu))
        out.say(f"mu={fmt(mu)}: x1*={fmt(eq.x1_star)} x2*={fmt(eq.x2_star)} "
                f"z1*={fmt(eq.z1_star)} z2*={fmt(eq.z2_star)}")
        out.row([mu, *eq])
    return EXIT_OK


def run_classify(args, out: Output) -> int:
    mus = _mu_values(args) or [params_from(args).mu]
    out.header(CLASSIFY_HEADER)
    for mu in mus:
        report = crossing.classify(params_from(args, mu))
        cls, omega0, tau_star, transversal = _classify_fields(report)
        out.say(f"mu={fmt(mu)}: {cls}")
        if report.crossings:
            out.say("  omega0: " + ", ".join(fmt(w) for w in report.crossing_frequencies))
        if tau_star is not None:
            sign = "+" if transversal > 0 else "-" if transversal < 0 else "0"
            out.say(f"  tau_star={fmt(tau_star)} transversality sign {sign}")
        out.row([mu, cls, omega0, tau_star, transversal])
    return EXIT_OK


def run_critical_delay(args, out: Output) -> int:
    params = params_from(args)
    report = crossing.classify(params, n_branches=args.branches or 3)
    out.say(f"{report.stability_class}; tau_star={fmt(report.critical_delay)}")
    out.header(["mu", "omega0", "branch", "tau", "transversal"])
    for cr in report.crossings:
        for k, tau in enumerate(cr.delays):
            out.row([params.mu, cr.omega, str(k), tau, cr.transversality])
    return EXIT_OK


def run_spectrum(args, out: Output) -> int:
    params = params_from(args)
    coeffs = closed_form_coeffs(params)
    tau = args.tau if args.tau is not None else 0.0
    if tau < 0:
        raise UsageError("tau must be non-negative")
    if args.rightmost:
        z = spectrum.rightmost_root(coeffs, tau)
        found = spectrum.newton_polish(coeffs, z, tau)
        roots, residuals = [z], [found[1] if found else math.nan]
        out.say(f"rightmost root at tau={fmt(tau)}: {fmt(z.real)} + {fmt(z.imag)}i")
    else:
        if args.region is None:
            raise UsageError("spectrum needs --region or --rightmost")
        grid = args.grid or [spectrum.DEFAULT_GRID, spectrum.DEFAULT_GRID]
        region = spectrum.Region(*args.region, *grid)
        result = spectrum.map_roots(coeffs, tau, region)
        roots, residuals = result.roots, result.residuals
        out.say(f"{len(roots)} roots in region (argument principle: {result.winding_count})")
    out.header(SPECTRUM_HEADER)
    for z, res in zip(roots, residuals):
        out.row([z.real, z.imag, res])
    return EXIT_OK


def run_simulate(args, out: Output) -> int:
    params = params_from(args)
    tau = args.tau if args.tau is not None else 0.0
    pert = args.perturb if args.perturb is not None else (0.1, 0.0, 0.0, 0.0)
    cfg = dde.SimConfig.perturbed(params, tau, pert, t_end=args.t_end, step=args.step)
    traj = dde.integrate(params, cfg)
    out.say(f"verdict: {traj.verdict}")
    if traj.failure:
        out.say(f"  stopped at t={fmt(traj.times[-1])}: {traj.failure}")
    if traj.verdict is dde.Verdict.OSCILLATING:
        try:
            out.say(f"  period: {fmt(dde.period_estimate(traj))}")
        except dde.InsufficientPeaksError:
            pass
    out.header(TRAJECTORY_HEADER)
    for t, state in zip(traj.times, traj.states):
        out.row([t, *state])
    return EXIT_OK


def sweep_row(param_values: dict, mu: float) -> list:
    """One sweep row; failures land in the trailing error column."""
    row = [mu]
    try:
        params = ModelParams(**{**param_values, "mu": mu})
        eq = equilibrium(params)
        report = crossing.classify(params)
        return row + _classify_fields(report) + list(eq) + [None]
    except (ValueError, ArithmeticError) as err:
        return row + [None] * 8 + [f"{type(err).__name__}: {err}"]


def run_sweep(args, out: Output) -> int:
    mus = _mu_values(args)
    if mus is None:
        raise UsageError("sweep needs --mu-grid")
    base = asdict(params_from(args, mu=0.0))
    base.pop("mu")
    workers = args.workers or 1
    if workers < 1:
        raise UsageError("workers must be positive")
    if workers == 1:
        rows = [sweep_row(base, mu) for mu in mus]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_row, [base] * len(mus), mus))
    out.header(SWEEP_HEADER)
    for row in rows:
        out.row(row)
    failed = sum(1 for r in rows if r[-1])
    out.say(f"{len(rows)} rows, {failed} with errors")
    return EXIT_OK


def run_verify(args, out: Output) -> int:
    names = set(args.check) if args.check else None
    if names:
        known = {name for name, _, _ in verify.CHECKS}
        unknown = names - known
        if unknown:
            raise UsageError(f"unknown check(s): {', '.join(sorted(unknown))}")
    start = time.perf_counter()
    results = verify.run_checks(quick=args.quick, names=names)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.1f} s): {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed in {time.perf_counter() - start:.1f} s")
    return min(failed, 125)


COMMANDS = {
    "equilibrium": run_equilibrium,
    "classify": run_classify,
    "critical-delay": run_critical_delay,
    "spectrum": run_spectrum,
    "simulate": run_simulate,
    "sweep": run_sweep,
    "verify": run_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:  # --help or a usage error
        return stop.code if isinstance(stop.code, int) else EXIT_USAGE
    prog = parser.prog
    try:
        _apply_config(parser, args)
        if args.command == "verify":
            return run_verify(args, None)
        out = Output(args.out)
        code = COMMANDS[args.command](args, out)
        out.close()
        return code
    except UsageError as err:
        print(f"{prog}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as err:
        print(f"{prog}: parameter error: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    except dde.StepSizeError as err:
        print(f"{prog}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as err:
        print(f"{prog}: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as err:
        print(f"{prog}: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
