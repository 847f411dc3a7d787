"""
Command-line interface.

    robust-inversion design    --family robust-alpha --T 1 --W 1 --alpha -0.206 --out pulse.csv
    robust-inversion analyze   --family smooth-sine --T 1 --W 1
    robust-inversion simulate  --family flat-pi --T 1 --gamma-d-sq 1e-3 --engine lindblad
    robust-inversion scan-alpha --alpha-min -1 --alpha-max 0 --out scan.csv
    robust-inversion compare   --scenario fig2a --engine lindblad --out fig2a.csv
    robust-inversion reproduce --figure fig1b --out fig1b.csv

Quantities accept unit suffixes (``3us``, ``"0.784 2pi-MHz"``, ``0.1/us``);
values starting with a minus sign and carrying a unit must be written as
``--delta0=-1us``. ``--config FILE`` reads flat ``key = value`` lines whose
keys are the long option names; flags given on the command line win.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    PerturbationSpec,
    TrajectoryResult,
    propagate_bloch,
    propagate_density_matrix,
    simulate_white_noise_detuning,
)
from .errors import NumericalError
from .optimize import (
    FIG2_DELTA0_MAX,
    FIG2_GAMMA_D_SQ_MAX,
    comparison_surface,
    fig2_protocols,
    scan_alpha,
)
from .pulses import (
    fmt_float,
    pulse_area,
    read_pulse_csv,
    synthesize_pulse,
    write_pulse_csv,
    write_pulse_json,
)
from .schedules import make_schedule
from .sensitivity import analyze
from .units import parse_frequency, parse_rate, parse_sqrt_rate, parse_time

FAMILIES = ("flat-pi", "smooth-sine", "robust-alpha")
FIGURES = ("fig1a", "fig1b", "fig1c", "fig2a", "fig2b")
FIG1_ALPHA_RANGE = (-4.0, 4.0)
FIG1_POINTS = 801
FIG1C_ALPHA = -0.206


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


# -- config files -----------------------------------------------------------


@dataclass
class RunConfig:
    """Resolved options of one invocation; serializes to flat ``key = value`` text."""

    command: str
    options: dict = field(default_factory=dict)

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        opts = {k: v for k, v in vars(ns).items() if k not in ("command", "handler", "config", "save_config")}
        return cls(ns.command, opts)

    def to_text(self) -> str:
        lines = [f"command = {self.command}"]
        for key in sorted(self.options):
            value = self.options[key]
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = fmt_float(value)
            lines.append(f"{key.replace('_', '-')} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        raw: dict[str, str] = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {n}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            raw[key.replace("-", "_")] = value
        return cls(raw.pop("command", ""), raw)

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def read(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text())


# -- argument groups --------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="flat key = value file with option defaults")
    p.add_argument("--save-config", metavar="FILE", help="write the resolved options to FILE")


def _schedule_args(p: argparse.ArgumentParser, need_family: bool = True) -> None:
    p.add_argument("--family", choices=FAMILIES, default="flat-pi" if not need_family else None,
                   help="protocol family")
    p.add_argument("--T", type=parse_time, default=1.0, help="duration (s, or with suffix s/ms/us/ns)")
    p.add_argument("--W", type=float, default=1.0, help="relative ramp width in (0, 1]")
    p.add_argument("--alpha", type=float, default=0.0, help="robust-alpha shape parameter")
    p.add_argument("--n-samples", type=int, default=2000, help="pulse samples N (N + 1 grid points)")


def _perturbation_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma-d", type=parse_sqrt_rate, help="dephasing strength gamma_d (1/sqrt(s))")
    g.add_argument("--gamma-d-sq", type=parse_rate, help="gamma_d^2 (1/s, or 1/us)")
    g.add_argument("--dephasing-rate", type=parse_rate, help="coherence decay rate 2 gamma_d^2")
    p.add_argument("--delta0", type=parse_frequency, default=0.0,
                   help="systematic detuning offset (rad/s, or 2pi-MHz)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robust-inversion", description="Design and analysis of robust two-level population inversion pulses.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("design", help="synthesize a pulse and write it as CSV or JSON")
    _schedule_args(p)
    p.add_argument("--out", help="output file (.csv or .json)")
    _common(p)
    p.set_defaults(handler=cmd_design)

    p = sub.add_parser("analyze", help="noise and systematic sensitivities of a protocol")
    _schedule_args(p)
    p.add_argument("--out", help="JSON report file")
    _common(p)
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("simulate", help="propagate a protocol under dephasing and detuning offset")
    _schedule_args(p, need_family=False)
    p.add_argument("--pulse-file", help="simulate a sampled pulse CSV (t,omega,delta) instead of a family")
    _perturbation_args(p)
    p.add_argument("--engine", choices=("lindblad", "density-matrix", "stochastic"), default="lindblad")
    p.add_argument("--n-steps", type=int, default=10_000, help="RK4 steps over [0, T]")
    p.add_argument("--n-traj", type=int, default=1000, help="trajectories for the stochastic engine")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="trajectory CSV (t,rx,ry,rz) or JSON summary")
    _common(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("scan-alpha", help="tabulate q_S/(WT)^2 and Omega_max WT versus alpha")
    p.add_argument("--alpha-min", type=float, default=-1.0)
    p.add_argument("--alpha-max", type=float, default=0.0)
    p.add_argument("--n-points", type=int, default=201)
    p.add_argument("--T", type=parse_time, default=1.0)
    p.add_argument("--W", type=float, default=1.0)
    p.add_argument("--out", help="CSV (long format) or JSON")
    _common(p)
    p.set_defaults(handler=cmd_scan_alpha)

    p = sub.add_parser("compare", help="P_1(T) surfaces of the flat and robust pulses")
    p.add_argument("--scenario", choices=("fig2a", "fig2b"), default="fig2a")
    p.add_argument("--engine", choices=("lindblad", "perturbative"), default="lindblad")
    p.add_argument("--n-grid", type=int, default=41)
    p.add_argument("--gamma-d-sq-max", type=parse_rate, default=FIG2_GAMMA_D_SQ_MAX, help="upper gamma_d^2")
    p.add_argument("--delta0-max", type=parse_frequency, default=FIG2_DELTA0_MAX, help="half-range of delta0")
    p.add_argument("--n-steps", type=int, default=2000)
    p.add_argument("--out", help="CSV (long format) or JSON")
    _common(p)
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("reproduce", help="write the data behind a figure with its parameters baked in")
    p.add_argument("--figure", choices=FIGURES, required=True)
    p.add_argument("--n-grid", type=int, default=41, help="surface resolution for fig2a/fig2b")
    p.add_argument("--out", help="CSV or JSON file (default <figure>.csv)")
    _common(p)
    p.set_defaults(handler=cmd_reproduce)
    return parser


# -- helpers ----------------------------------------------------------------


def _is_json(path) -> bool:
    return str(path).lower().endswith(".json")


def _schedule_from(args):
    return make_schedule(args.family, args.T, args.W, args.alpha)


def _perturbation_from(args) -> PerturbationSpec:
    if args.gamma_d is not None:
        return PerturbationSpec.from_gamma_d(args.gamma_d, args.delta0)
    if args.dephasing_rate is not None:
        return PerturbationSpec.from_dephasing_rate(args.dephasing_rate, args.delta0)
    return PerturbationSpec(args.gamma_d_sq or 0.0, args.delta0)


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


# -- subcommands ------------------------------------------------------------


def cmd_design(args) -> int:
    s = _schedule_from(args)
    pulse = synthesize_pulse(s, args.n_samples)
    T = s.duration
    print(f"family       {s.family}")
    print(f"omega_max    {fmt_float(pulse.omega_max)} rad/s")
    print(f"pulse_area   {fmt_float(pulse_area(pulse))} rad")
    print(f"theta(0)=pi  {'ok' if abs(s.theta(0.0) - np.pi) < 1e-12 else 'FAIL'}")
    print(f"theta(T)=0   {'ok' if abs(s.theta(T)) < 1e-12 else 'FAIL'}")
    if s.satisfies_smooth_boundaries:
        ends = abs(pulse.rabi[0]) + abs(pulse.rabi[-1])
        print(f"Omega(0)=Omega(T)=0  {'ok' if ends < 1e-9 * pulse.omega_max else 'FAIL'}")
    if args.out:
        (write_pulse_json if _is_json(args.out) else write_pulse_csv)(pulse, args.out)
    return 0


def cmd_analyze(args) -> int:
    report = analyze(_schedule_from(args))
    data = dict(report.to_dict(), saturates_bound=report.saturates_bound, systematic_null=report.systematic_null)
    text = json.dumps(data, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def cmd_simulate(args) -> int:
    if args.pulse_file:
        pulse = read_pulse_csv(args.pulse_file)
    else:
        pulse = synthesize_pulse(_schedule_from(args), args.n_samples)
    pert = _perturbation_from(args)
    if args.engine == "stochastic":
        ens = simulate_white_noise_detuning(
            pulse, pert.gamma_d_sq, pert.delta0, args.n_traj, args.seed, args.n_steps
        )
        summary = ens.summary()
        print(json.dumps(summary, indent=2))
        if args.out:
            if _is_json(args.out):
                _write_json(args.out, summary)
            else:
                TrajectoryResult(ens.times, ens.mean_states).write_csv(args.out)
        return 0
    engine = propagate_bloch if args.engine == "lindblad" else propagate_density_matrix
    traj = engine(pulse, pert, n_steps=args.n_steps)
    print(f"P1(T) = {fmt_float(traj.p1)}")
    if args.out:
        if _is_json(args.out):
            _write_json(args.out, {"engine": args.engine, "gamma_d_sq": pert.gamma_d_sq,
                                   "delta0": pert.delta0, "P1": traj.p1})
        else:
            traj.write_csv(args.out)
    return 0


def cmd_scan_alpha(args) -> int:
    if args.n_points < 1:
        raise ValueError("--n-points must be positive")
    grid = np.linspace(args.alpha_min, args.alpha_max, args.n_points)
    scan = scan_alpha(grid, args.W, args.T)
    for a, om in scan.to_dict()["stars"]:
        print(f"q_S = 0 at alpha = {fmt_float(a)}  (Omega_max W T = {fmt_float(om)})")
    if not scan.zeros:
        print("no zero of q_S on the grid")
    if args.out:
        if _is_json(args.out):
            Path(args.out).write_text(scan.to_json() + "\n")
        else:
            scan.write_csv(args.out)
    return 0


def _surface(scenario, engine, n_grid, g_max, d_max, n_steps):
    pulses, labels = fig2_protocols(scenario)
    return comparison_surface(pulses, (0.0, g_max), (-d_max, d_max), n_grid, engine, n_steps, labels)


def _emit_surface(surf, out) -> None:
    print(f"flat-pi dominated on {surf.dominated_fraction(0):.4f} of the grid")
    print(f"robust-alpha dominated on {surf.dominated_fraction(1):.4f} of the grid")
    if out:
        if _is_json(out):
            Path(out).write_text(surf.to_json() + "\n")
        else:
            surf.write_csv(out)


def cmd_compare(args) -> int:
    if args.n_grid < 2:
        raise ValueError("--n-grid must be at least 2")
    surf = _surface(args.scenario, args.engine, args.n_grid, args.gamma_d_sq_max, args.delta0_max, args.n_steps)
    _emit_surface(surf, args.out)
    return 0


def cmd_reproduce(args) -> int:
    out = args.out or f"{args.figure}.csv"
    fig = args.figure
    if fig in ("fig1a", "fig1b"):
        scan = scan_alpha(np.linspace(*FIG1_ALPHA_RANGE, FIG1_POINTS))
        column = "qs_scaled" if fig == "fig1a" else "omega_max_wt"
        values = scan.qs_scaled if fig == "fig1a" else scan.omega_max_wt
        if _is_json(out):
            stars = scan.to_dict()["stars"]
            _write_json(out, {"alpha": scan.alpha.tolist(), column: values.tolist(), "stars": stars})
        else:
            with open(out, "w") as fh:
                fh.write(f"alpha,{column}\n")
                for a, v in zip(scan.alpha, values):
                    fh.write(f"{fmt_float(a)},{fmt_float(v)}\n")
        for a, om in scan.to_dict()["stars"]:
            print(f"star alpha = {fmt_float(a)}  Omega_max W T = {fmt_float(om)}")
    elif fig == "fig1c":
        pulse = synthesize_pulse(make_schedule("robust-alpha", 1.0, 1.0, FIG1C_ALPHA))
        if _is_json(out):
            _write_json(out, {"t_over_T": pulse.grid.tolist(), "omega_T": pulse.rabi.tolist(),
                              "delta_T": pulse.detuning.tolist(), "W": 1.0, "alpha": FIG1C_ALPHA})
        else:
            with open(out, "w") as fh:
                fh.write("t_over_T,omega_T,delta_T\n")
                for row in zip(pulse.grid, pulse.rabi, pulse.detuning):
                    fh.write(",".join(fmt_float(v) for v in row) + "\n")
        print(f"max Omega T = {fmt_float(pulse.rabi.max())}")
    else:
        surf = _surface(fig, "lindblad", args.n_grid, FIG2_GAMMA_D_SQ_MAX, FIG2_DELTA0_MAX, 2000)
        _emit_surface(surf, out)
    print(f"wrote {out}")
    return 0


# -- entry point ------------------------------------------------------------


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return argv
    try:
        cfg = RunConfig.read(known.config)
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if not any(arg in subs.choices for arg in argv):
        if not cfg.command:
            parser.error("config file has no 'command' and none was given")
        argv = [cfg.command] + argv
    command = next(arg for arg in argv if arg in subs.choices)
    sp = subs.choices[command]
    dests = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in cfg.options.items():
        if key not in dests or key in ("config", "save_config", "help"):
            sp.error(f"unknown config key {key!r}")
        defaults[key] = value
    sp.set_defaults(**defaults)
    return argv


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config(parser, argv)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        parser.exit(2)
    if getattr(args, "family", "") is None:
        parser.error("--family is required")
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    if args.save_config:
        RunConfig.from_namespace(args).write(args.save_config)
    try:
        return args.handler(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
