"""Command-line entry point.

Subcommands cover every experiment family: staircase / multi-staircase /
MAX 3-SAT runs, random instance generation, fractal plots, one-frequency
animation frames, and the two verification suites (closed-form signals
against the brute-force oracle, and the scrambled-vs-basic symmetry check).

Run parameters come from (highest precedence first) command-line flags, a
``--config`` INI file with sections [experiment], [ga], [clamping], and
[fitness], and per-command defaults. The default output directory is
``$HYPERCLIMB_OUT_DIR`` (falling back to ./runs) plus a per-run subfolder.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .experiment import (
    ExperimentConfig,
    MaxSatSpec,
    MultiStaircaseSpec,
    RecordOptions,
    StaircaseSpec,
    run_experiment,
    run_symmetry_check,
)
from .fractal import emit_one_frequency_frames, render_fractal_plot, system_for_staircase
from .ga import ClampingConfig, GaConfig
from .maxsat import generate_instance, write_dimacs
from .rng import stream
from .schema import signal_check_suite
from .staircase import (
    MultiStaircaseDescriptor,
    StaircaseDescriptor,
    make_basic,
    make_basic_multi,
    read_descriptor_file,
)

RUN_DEFAULTS = {
    "run-staircase": {"population": 500, "generations": 2500, "trials": 20},
    "run-multistaircase": {"population": 500, "generations": 800, "trials": 20},
    "run-maxsat": {"population": 200, "generations": 4000, "trials": 10},
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:  # surface a one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperclimb",
        description="Genetic-algorithm experiments on staircase and MAX 3-SAT fitness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for command in ("run-staircase", "run-multistaircase", "run-maxsat"):
        p = sub.add_parser(command, help=f"{command.removeprefix('run-')} experiment")
        _add_run_flags(p, command)
        p.set_defaults(handler=_cmd_run, command=command)

    p = sub.add_parser("gen-maxsat", help="generate a random 3-CNF DIMACS file")
    p.add_argument("--vars", type=int, required=True)
    p.add_argument("--clauses", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_gen_maxsat)

    p = sub.add_parser("plot-fractal", help="exhaustive-query greyscale plot")
    p.add_argument("--descriptor", required=True, help="staircase descriptor file")
    p.add_argument("--placement", choices=("leading", "trailing"), default="leading")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="fractal.pgm")
    p.set_defaults(handler=_cmd_plot_fractal)

    p = sub.add_parser("emit-frames", help="one-frequency heatmap frames from a trace")
    p.add_argument("--trace", required=True, help="trace CSV with freq_* columns")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--bar-height", type=int, default=1)
    p.set_defaults(handler=_cmd_emit_frames)

    p = sub.add_parser(
        "verify-signals",
        help="closed-form step/stage signals against the brute-force oracle",
    )
    p.add_argument("--max-h", type=int, default=4, dest="max_h")
    p.add_argument("--max-o", type=int, default=3, dest="max_o")
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.set_defaults(handler=_cmd_verify_signals)

    p = sub.add_parser(
        "verify-symmetry",
        help="scrambled staircase vs basic form: exact transform + GA statistics",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--population", type=int, default=100)
    p.set_defaults(handler=_cmd_verify_symmetry)

    return parser


def _add_run_flags(p: argparse.ArgumentParser, command: str) -> None:
    p.add_argument("--config", help="INI config file; flags override its values")
    if command == "run-maxsat":
        p.add_argument("--dimacs", help="existing DIMACS CNF file")
        p.add_argument("--vars", type=int, help="variables for generated instances")
        p.add_argument("--clauses", type=int, help="clauses for generated instances")
    else:
        nargs = 5 if command == "run-multistaircase" else 4
        metavar = ("C", "H", "O", "DELTA", "SIGMA")[-nargs:]
        p.add_argument(
            "--basic",
            nargs=nargs,
            metavar=metavar,
            help="canonical-layout descriptor parameters",
        )
        p.add_argument("--descriptor", help="descriptor file")
    p.add_argument("--trials", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--mutation-rate", type=float, dest="mutation_rate")
    p.add_argument("--crossover", choices=("uniform", "none"))
    p.add_argument(
        "--crossover-probability", type=float, dest="crossover_probability"
    )
    p.add_argument(
        "--clamping",
        nargs=3,
        metavar=("FLAG_FREQ", "UNFLAG_FREQ", "FLAG_PERIOD"),
        help="enable clamping with the given parameters",
    )
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--jobs", type=int)
    p.add_argument(
        "--record-one-frequencies",
        action="store_true",
        default=None,
        dest="record_one_frequencies",
    )
    p.add_argument("--track-steps", type=int, dest="track_steps")


# ---------------------------------------------------------------------------
# Config assembly
# ---------------------------------------------------------------------------


def _read_config_file(path: str) -> dict:
    """Flatten the INI sections into one option dict."""
    if not Path(path).is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    ini = configparser.ConfigParser(inline_comment_prefixes=("#",))
    ini.read(path)
    out: dict = {}
    if ini.has_section("experiment"):
        sec = ini["experiment"]
        out["trials"] = sec.getint("trials", fallback=None)
        out["jobs"] = sec.getint("jobs", fallback=None)
        out["out_dir"] = sec.get("out_dir", fallback=None)
        out["record_one_frequencies"] = sec.getboolean(
            "record_one_frequencies", fallback=None
        )
        out["track_steps"] = sec.getint("track_steps", fallback=None)
    if ini.has_section("ga"):
        sec = ini["ga"]
        out["population"] = sec.getint("population_size", fallback=None)
        out["mutation_rate"] = sec.getfloat("mutation_rate", fallback=None)
        out["crossover"] = sec.get("crossover", fallback=None)
        out["crossover_probability"] = sec.getfloat(
            "crossover_probability", fallback=None
        )
        out["generations"] = sec.getint("generations", fallback=None)
        out["seed"] = sec.getint("seed", fallback=None)
    if ini.has_section("clamping"):
        sec = ini["clamping"]
        out["clamping"] = (
            sec.getfloat("flag_freq", fallback=0.01),
            sec.getfloat("unflag_freq", fallback=0.1),
            sec.getint("flag_period", fallback=200),
        )
    if ini.has_section("fitness"):
        sec = ini["fitness"]
        out["fitness_type"] = sec.get("type", fallback=None)
        out["basic"] = sec.get("basic", fallback=None)
        out["descriptor"] = sec.get("descriptor", fallback=None)
        out["dimacs"] = sec.get("dimacs", fallback=None)
        out["vars"] = sec.getint("vars", fallback=None)
        out["clauses"] = sec.getint("clauses", fallback=None)
    return out


def _merged_option(args, file_options: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is None:
        value = file_options.get(name)
    return default if value is None else value


def _build_run_config(args) -> tuple[ExperimentConfig, Path, int]:
    file_options = _read_config_file(args.config) if args.config else {}
    defaults = RUN_DEFAULTS[args.command]

    def opt(name, default=None):
        return _merged_option(args, file_options, name, default)

    clamping = opt("clamping")
    if clamping is not None and not isinstance(clamping, ClampingConfig):
        ff, uf, period = clamping
        clamping = ClampingConfig(float(ff), float(uf), int(period))

    ga = GaConfig(
        population_size=int(opt("population", defaults["population"])),
        mutation_rate=float(opt("mutation_rate", 0.003)),
        crossover=opt("crossover", "uniform"),
        crossover_probability=float(opt("crossover_probability", 1.0)),
        generations=int(opt("generations", defaults["generations"])),
        seed=int(opt("seed", 0)),
        clamping=clamping,
    )

    fitness = _build_fitness_spec(args, file_options, opt)
    record = RecordOptions(
        one_frequencies=bool(opt("record_one_frequencies", False)),
        track_steps=int(opt("track_steps", 0)),
    )
    config = ExperimentConfig(
        fitness=fitness,
        ga=ga,
        trials=int(opt("trials", defaults["trials"])),
        record=record,
    )

    out_dir = opt("out_dir")
    if out_dir is None:
        root = os.environ.get("HYPERCLIMB_OUT_DIR", "runs")
        out_dir = Path(root) / f"{args.command.removeprefix('run-')}-seed{ga.seed}"
    return config, Path(out_dir), int(opt("jobs", 1))


def _build_fitness_spec(args, file_options: dict, opt):
    if args.command == "run-maxsat":
        dimacs = opt("dimacs")
        if dimacs is not None:
            return MaxSatSpec(dimacs_path=str(dimacs))
        num_vars, num_clauses = opt("vars"), opt("clauses")
        if num_vars is None or num_clauses is None:
            raise ValueError("run-maxsat needs --dimacs or both --vars and --clauses")
        return MaxSatSpec(num_vars=int(num_vars), num_clauses=int(num_clauses))

    basic = opt("basic")
    descriptor_path = opt("descriptor")
    if basic is not None:
        parts = basic.split() if isinstance(basic, str) else list(basic)
        if args.command == "run-multistaircase":
            if len(parts) != 5:
                raise ValueError("--basic needs: cardinality height order delta sigma")
            descriptor = make_basic_multi(
                int(parts[0]), int(parts[1]), int(parts[2]),
                float(parts[3]), float(parts[4]),
            )
        else:
            if len(parts) != 4:
                raise ValueError("--basic needs: height order delta sigma")
            descriptor = make_basic(
                int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
            )
    elif descriptor_path is not None:
        descriptor = read_descriptor_file(descriptor_path)
    else:
        raise ValueError(f"{args.command} needs --basic or --descriptor")

    if args.command == "run-multistaircase":
        if not isinstance(descriptor, MultiStaircaseDescriptor):
            raise ValueError("run-multistaircase needs a multi-staircase descriptor")
        return MultiStaircaseSpec(descriptor)
    if not isinstance(descriptor, StaircaseDescriptor):
        raise ValueError("run-staircase needs a single-ladder descriptor")
    return StaircaseSpec(descriptor)


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------


def _cmd_run(args) -> int:
    config, out_dir, jobs = _build_run_config(args)
    traces, aggregate = run_experiment(config, out_dir=out_dir, jobs=jobs)
    print(f"wrote {len(traces)} trace file(s) and aggregate.csv to {out_dir}")
    avg = aggregate.columns["avg_fitness_mean"][-1]
    best = aggregate.columns["best_fitness_mean"][-1]
    print(f"final generation: mean avg fitness {avg:.6g}, mean best fitness {best:.6g}")
    return 0


def _cmd_gen_maxsat(args) -> int:
    rng = stream(args.seed, 0, "instance")
    instance = generate_instance(args.vars, args.clauses, rng)
    write_dimacs(instance, args.out)
    print(f"wrote {instance.num_clauses} clauses over {instance.num_vars} vars to {args.out}")
    return 0


def _cmd_plot_fractal(args) -> int:
    descriptor = read_descriptor_file(args.descriptor)
    if not isinstance(descriptor, StaircaseDescriptor):
        raise ValueError("plot-fractal needs a single-ladder staircase descriptor")
    system = system_for_staircase(descriptor, placement=args.placement)
    rng = stream(args.seed, 0, "noise")
    image = render_fractal_plot(descriptor, system, rng, out_path=args.out)
    print(f"wrote {image.shape[1]}x{image.shape[0]} greymap to {args.out}")
    return 0


def _cmd_emit_frames(args) -> int:
    from .experiment import read_trace_csv

    trace = read_trace_csv(args.trace)
    paths = emit_one_frequency_frames(trace, args.out_dir, bar_height=args.bar_height)
    print(f"wrote {len(paths)} frame(s) to {args.out_dir}")
    return 0


def _cmd_verify_signals(args) -> int:
    checks = signal_check_suite(max_height=args.max_h, max_order=args.max_o)
    failures = [c for c in checks if not c.within(args.tolerance)]
    families = sorted({(c.height, c.order, c.increment) for c in checks})
    for height, order, increment in families:
        members = [
            c for c in checks
            if (c.height, c.order, c.increment) == (height, order, increment)
        ]
        worst = max(c.error for c in members)
        status = "ok" if all(c.within(args.tolerance) for c in members) else "FAIL"
        print(
            f"height={height} order={order} increment={increment}: "
            f"{len(members)} checks {status} (max err {worst:.2e})"
        )
    print(
        f"{len(checks) - len(failures)}/{len(checks)} signal checks within "
        f"{args.tolerance:g}"
    )
    return 0 if not failures else 1


def _cmd_verify_symmetry(args) -> int:
    report = run_symmetry_check(
        seed=args.seed,
        trials=args.trials,
        generations=args.generations,
        population=args.population,
    )
    print(
        "exhaustive transform equivalence: "
        + ("ok" if report.exhaustive_ok else "FAIL")
    )
    print(
        f"mean avg-fitness curves: max |z| = {report.max_z:.3f} "
        f"(threshold {report.z_threshold}) over {report.generations} generations, "
        f"{report.trials} trials per function"
    )
    print("symmetry check " + ("passed" if report.passed else "FAILED"))
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
