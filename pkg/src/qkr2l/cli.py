"""Command-line front end.

Subcommands: ``evolve``, ``fig1``, ``fig2``, ``sweep``, ``verify``.

Exit codes: 0 success, 1 configuration error, 2 verification failure,
3 numeric-integrity error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import RunConfig, parse_int, parse_sweep_key, parse_values, read_config_file
from .errors import NumericIntegrityError, QKRError
from .evolution import Backend, CapacityWarning, evolve
from .experiments import (
    MIN_FIT_STEPS,
    analyse_growth,
    run_fig2,
    run_verify,
    suggest_k_max,
)
from .closed_form import is_antiresonant
from .io import atomic_write_text, csv_text, fmt, sidecar_path, write_sidecar, write_trajectory_csv
from .lattice import BlochInit, ModelParams, SpinorState, bloch_state

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_NUMERIC = 3

TWO_PI = 2.0 * math.pi

COMMAND_DEFAULTS = {
    "evolve": dict(kappa=1.0, tau=TWO_PI, delta_tilde=0.0, beta=0.0, steps=100, backend="bessel-matrix",
                   amplitudes=((0, 0j, 1 + 0j),), leakage_threshold=1e-10, seed=0, jobs=1,
                   out="trajectory.csv"),
    "fig1": dict(kappa=1.0, tau=TWO_PI, delta_tilde=0.97 * math.pi, beta=0.0, steps=500,
                 backend="bessel-matrix", amplitudes=((0, 0j, 1 + 0j),), leakage_threshold=1e-10, seed=0,
                 jobs=1, out="fig1.csv"),
    "fig2": dict(kappa=1.0, tau=TWO_PI, delta_tilde=0.0, beta=0.0, steps=500, backend="bessel-matrix",
                 grid_size=33, leakage_threshold=1e-10, seed=0, jobs=1, out="fig2.csv"),
    "sweep": dict(kappa=1.0, tau=TWO_PI, delta_tilde=0.0, beta=0.0, steps=500, backend="bessel-matrix",
                  amplitudes=((0, 0j, 1 + 0j),), leakage_threshold=1e-10, seed=0, jobs=1, out="sweep"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _common(parser: argparse.ArgumentParser):
    g = parser.add_argument_group("run parameters")
    g.add_argument("--config", metavar="PATH", help="key = value file; flags override its entries")
    g.add_argument("--kappa")
    g.add_argument("--tau", help="kinetic phase scale; accepts e.g. 2pi")
    g.add_argument("--delta-tilde", dest="delta_tilde", help="detuning phase; accepts e.g. 0.97pi")
    g.add_argument("--beta", help="quasimomentum in [-1/2, 1/2)")
    g.add_argument("--kmax", dest="k_max", help="lattice half-width (default: sized from steps and kappa)")
    g.add_argument("--steps")
    g.add_argument("--backend", help="bessel or splitstep")
    g.add_argument("--gamma")
    g.add_argument("--phi")
    g.add_argument("--amplitudes", help="explicit initial state 'k:a:b; k:a:b'")
    g.add_argument("--record", help="comma-separated observables to record")
    g.add_argument("--out", metavar="PATH")
    g.add_argument("--leakage-threshold", dest="leakage_threshold")
    g.add_argument("--seed")
    g.add_argument("--jobs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qkr2l", description="Two-level quantum kicked rotor simulations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evolve", help="iterate the map and write a trajectory CSV")
    _common(p)
    p = sub.add_parser("fig1", help="second moment at generic detuning and its late-time growth exponent")
    _common(p)
    p = sub.add_parser("fig2", help="entanglement entropy over the Bloch sphere of initial states")
    _common(p)
    p.add_argument("--grid-size", dest="grid_size")
    p = sub.add_parser("sweep", help="repeat a run over values of one parameter")
    _common(p)
    p.add_argument("--sweep", help="name of the swept key")
    p.add_argument("--values", help="comma-separated values (pi multiples allowed)")
    p = sub.add_parser("verify", help="run verification batteries")
    p.add_argument("suite", nargs="?", default="all", choices=["bessel", "identities", "backends", "closedform", "all"])
    p.add_argument("--seed", default="0")
    return parser


_CONFIG_FLAGS = ("kappa", "tau", "delta_tilde", "beta", "k_max", "steps", "backend", "gamma", "phi", "amplitudes",
                 "record", "out", "leakage_threshold", "seed", "jobs", "grid_size", "sweep", "values")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base = read_config_file(args.config) if getattr(args, "config", None) else RunConfig()
    flags = {key: getattr(args, key) for key in _CONFIG_FLAGS if getattr(args, key, None) is not None}
    swept = parse_sweep_key(flags["sweep"]) if "sweep" in flags else base.sweep
    if swept in ("gamma", "phi") and swept not in flags and getattr(base, swept) is None:
        # the swept angle is overwritten per point; seed it so the pair validates
        values = parse_values(flags["values"]) if "values" in flags else base.values
        if values:
            flags[swept] = values[0]
    merged = base.merged(RunConfig.from_mapping(flags))
    return merged.with_defaults(**COMMAND_DEFAULTS[args.command])


def initial_state(config: RunConfig, k_max: int) -> tuple[SpinorState, object]:
    if config.gamma is not None:
        init = BlochInit(config.gamma, config.phi)
        return bloch_state(init, k_max), init
    state = SpinorState.from_sites(
        k_max,
        a={k: a for k, a, _ in config.amplitudes},
        b={k: b for k, _, b in config.amplitudes},
    )
    return state.normalized(), "amplitudes"


def _init_width(config: RunConfig) -> int:
    if config.gamma is not None:
        return 1
    ks = [k for k, _, _ in config.amplitudes]
    return 2 * max(abs(k) for k in ks) + 1


def params_for(config: RunConfig) -> ModelParams:
    k_max = config.k_max
    if k_max is None:
        k_max = suggest_k_max(config.steps, abs(config.kappa), _init_width(config))
    return ModelParams(config.kappa, config.tau, config.delta_tilde, config.beta, k_max)


def _sidecar(out, config: RunConfig, started: float, argv, **extra):
    write_sidecar(sidecar_path(out), config.to_dict(), time.perf_counter() - started, argv, __version__, **extra)


def _run_evolve(config: RunConfig):
    params = params_for(config)
    state, init = initial_state(config, params.k_max)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CapacityWarning)
        traj = evolve(state, params, config.steps, config.backend, config.record, init=init,
                      leakage_threshold=config.leakage_threshold)
    notes = [str(w.message) for w in caught if issubclass(w.category, CapacityWarning)]
    return traj, params.k_max, notes


def cmd_evolve(config: RunConfig, argv) -> int:
    started = time.perf_counter()
    traj, k_max, notes = _run_evolve(config)
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    flagged = write_trajectory_csv(config.out, traj)
    if flagged:
        print(f"warning: leakage above {config.leakage_threshold:g}; rows flagged in {config.out}", file=sys.stderr)
    _sidecar(config.out, config, started, argv, k_max=k_max, truncation_compromised=flagged)
    print(f"wrote {config.out} ({len(traj)} rows)")
    return EXIT_OK


def cmd_fig1(config: RunConfig, argv) -> int:
    started = time.perf_counter()
    if config.steps < MIN_FIT_STEPS:
        raise QKRError(f"fig1 needs at least {MIN_FIT_STEPS} steps for the fit, got {config.steps}")
    traj, k_max, _ = _run_evolve(config)
    params = traj.params
    m2 = traj.column("m2")
    fit = analyse_growth(m2, periodic=is_antiresonant(params))
    rows = ((rec.n, rec.m2) for rec in traj.steps)
    atomic_write_text(config.out, csv_text(["n", "m2"], rows))
    report = fit.as_dict()
    _sidecar(config.out, config, started, argv, k_max=k_max, report=report,
             truncation_compromised=traj.truncation_compromised)
    if fit.slope is None:
        print(f"fit refused: {fit.diagnostic} (delta_tilde is an odd multiple of pi at tau = 2pi, beta = 0)")
    else:
        print(f"late-time log-log slope {fit.slope:.4f}; transient {fit.transient_length} steps; "
              f"early oscillation amplitude {fit.oscillation_amplitude:.4g}")
    print(f"wrote {config.out}")
    return EXIT_OK


def cmd_fig2(config: RunConfig, argv) -> int:
    started = time.perf_counter()
    result = run_fig2(config.grid_size, config.kappa, config.steps, k_max=config.k_max, backend=config.backend)
    header = ["gamma", "phi", "S_numeric", "S0_analytic", "abs_diff"]
    atomic_write_text(config.out, csv_text(header, result.rows()))
    worst = float(result.abs_diff.max())
    _sidecar(config.out, config, started, argv, k_max=result.params.k_max, max_abs_diff=worst,
             leakage=result.leakage)
    print(f"max |S_numeric - S0| = {worst:.3e} at n*kappa = {config.steps * config.kappa:g}")
    print(f"wrote {config.out}")
    return EXIT_OK


def _sweep_point(task):
    config, index = task
    traj, k_max, _ = _run_evolve(config)
    fit = None
    if config.steps >= MIN_FIT_STEPS:
        fit = analyse_growth(traj.column("m2"), periodic=is_antiresonant(traj.params))
    return index, traj, k_max, fit


def cmd_sweep(config: RunConfig, argv) -> int:
    started = time.perf_counter()
    if config.sweep is None:
        raise QKRError("sweep needs a swept key (--sweep KEY)")
    if not config.values:
        raise QKRError("sweep needs a non-empty value list (--values ...)")
    key = config.sweep
    outdir = Path(config.out)
    tasks = []
    for index, value in enumerate(config.values):
        point = RunConfig.from_dict({**config.to_dict(), key: value, "sweep": None, "values": None,
                                     "out": str(outdir / f"{key}_{index:03d}.csv")})
        if key in ("gamma", "phi") and (point.gamma is None or point.phi is None):
            raise QKRError("sweeping gamma or phi needs the other angle set")
        tasks.append((point, index))
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(task) for task in tasks]
    summary = []
    for (point, index), (_, traj, k_max, fit) in zip(tasks, results):
        flagged = write_trajectory_csv(point.out, traj)
        _sidecar(point.out, point, started, argv, k_max=k_max, truncation_compromised=flagged,
                 report=fit.as_dict() if fit else None)
        fit_cols = (fit.slope, fit.transient_length, fit.oscillation_amplitude, fit.diagnostic) if fit else \
            (float("nan"), -1, float("nan"), "run too short")
        slope, transient, osc, diag = fit_cols
        late = traj.steps[-1].m2 / max(point.steps, 1) ** 2
        summary.append([index, fmt(getattr(point, key)), "nan" if slope is None else fmt(slope),
                        -1 if transient is None else transient, "nan" if osc is None else fmt(osc),
                        fmt(late), diag, int(flagged), Path(point.out).name])
    header = ["index", key, "slope", "transient_length", "oscillation_amplitude", "late_m2_over_n2",
              "diagnostic", "flagged", "file"]
    summary_path = outdir / "summary.csv"
    atomic_write_text(summary_path, csv_text(header, summary))
    _sidecar(summary_path, config, started, argv)
    print(f"wrote {len(summary)} runs and {summary_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_verify(args.suite, seed=parse_int(args.seed))
    for check in checks:
        print(check.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_OK if not failed else EXIT_VERIFY


COMMANDS = {"evolve": cmd_evolve, "fig1": cmd_fig1, "fig2": cmd_fig2, "sweep": cmd_sweep}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        config = resolve_config(args)
        Backend.parse(config.backend)
        return COMMANDS[args.command](config, argv)
    except NumericIntegrityError as exc:
        print(f"numeric integrity error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (QKRError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
