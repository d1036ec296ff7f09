"""Experiment orchestration: multi-trial runs, traces, CSV persistence.

An experiment is a fitness specification plus a GA configuration, executed
for some number of independent trials. Each trial owns its random streams
(derived from the master seed and the trial index), so any subset of trials
is reproducible in isolation and results do not depend on scheduling. Trace
files are written as trials complete; an aggregate file holds the
per-generation mean and standard error of every recorded metric.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import FIRST_EXCEPTION, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .bits import all_bitstrings
from .ga import ClampState, GaConfig, init_population, step_generation
from .maxsat import generate_instance, read_dimacs
from .rng import stream, trial_streams
from .schema import stage_step_frequencies
from .staircase import (
    MultiStaircaseDescriptor,
    StaircaseDescriptor,
    basic_form,
    transform_to_basic_frame,
)


@dataclass(frozen=True)
class StaircaseSpec:
    descriptor: StaircaseDescriptor


@dataclass(frozen=True)
class MultiStaircaseSpec:
    descriptor: MultiStaircaseDescriptor


@dataclass(frozen=True)
class MaxSatSpec:
    """Either a DIMACS file, or generation parameters for per-trial random
    instances (drawn from the trial's instance stream, so two experiments
    with the same master seed see the same instances)."""

    dimacs_path: Optional[str] = None
    num_vars: Optional[int] = None
    num_clauses: Optional[int] = None

    def __post_init__(self) -> None:
        from_file = self.dimacs_path is not None
        generated = self.num_vars is not None and self.num_clauses is not None
        if from_file == generated:
            raise ValueError(
                "specify either dimacs_path or num_vars and num_clauses"
            )


FitnessSpec = Union[StaircaseSpec, MultiStaircaseSpec, MaxSatSpec]


@dataclass(frozen=True)
class RecordOptions:
    """What to record per generation beyond average and best fitness."""

    one_frequencies: bool = False
    track_steps: int = 0  # stage/step frequency depth; 0 disables
    unmutated_loci: bool = True

    def __post_init__(self) -> None:
        if self.track_steps < 0:
            raise ValueError("track_steps must be non-negative")


@dataclass(frozen=True)
class ExperimentConfig:
    fitness: FitnessSpec
    ga: GaConfig
    trials: int = 1
    record: RecordOptions = field(default_factory=RecordOptions)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.record.track_steps and isinstance(self.fitness, MaxSatSpec):
            raise ValueError("step tracking requires a staircase fitness")


@dataclass
class RunTrace:
    """Per-generation metrics of one trial."""

    trial: int
    seed: int
    config_digest: str
    avg_fitness: np.ndarray  # (G,)
    best_fitness: np.ndarray  # (G,)
    unmutated_loci: Optional[np.ndarray] = None  # (G,) int
    stage_frequencies: Optional[np.ndarray] = None  # (G, d) or (G, c, d)
    step_frequencies: Optional[np.ndarray] = None
    one_frequencies: Optional[np.ndarray] = None  # (G, span)

    @property
    def generations(self) -> int:
        return self.avg_fitness.shape[0]


def config_digest(config: ExperimentConfig) -> str:
    """Short stable digest of the full configuration."""
    payload = json.dumps(_config_dict(config), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _config_dict(config: ExperimentConfig) -> dict:
    spec = config.fitness
    if isinstance(spec, (StaircaseSpec, MultiStaircaseSpec)):
        d = spec.descriptor
        fitness = {
            "kind": "multi-staircase"
            if isinstance(spec, MultiStaircaseSpec)
            else "staircase",
            "height": d.height,
            "order": d.order,
            "increment": d.increment,
            "noisiness": d.noisiness,
            "span": d.span,
            "loci": d.loci.tolist(),
            "targets": d.targets.tolist(),
        }
        if isinstance(spec, MultiStaircaseSpec):
            fitness["cardinality"] = d.cardinality
    else:
        fitness = {
            "kind": "maxsat",
            "dimacs_path": spec.dimacs_path,
            "num_vars": spec.num_vars,
            "num_clauses": spec.num_clauses,
        }
    ga = config.ga
    return {
        "fitness": fitness,
        "ga": {
            "population_size": ga.population_size,
            "mutation_rate": ga.mutation_rate,
            "crossover": ga.crossover,
            "crossover_probability": ga.crossover_probability,
            "generations": ga.generations,
            "seed": ga.seed,
            "clamping": None
            if ga.clamping is None
            else [ga.clamping.flag_freq, ga.clamping.unflag_freq, ga.clamping.flag_period],
        },
        "trials": config.trials,
        "record": {
            "one_frequencies": config.record.one_frequencies,
            "track_steps": config.record.track_steps,
            "unmutated_loci": config.record.unmutated_loci,
        },
    }


def build_fitness(spec: FitnessSpec, master_seed: int, trial: int):
    """Materialize the fitness function for one trial."""
    if isinstance(spec, (StaircaseSpec, MultiStaircaseSpec)):
        return spec.descriptor
    if spec.dimacs_path is not None:
        return read_dimacs(spec.dimacs_path)
    rng = stream(master_seed, trial, "instance")
    return generate_instance(spec.num_vars, spec.num_clauses, rng)


def run_trial(config: ExperimentConfig, trial: int) -> RunTrace:
    """Execute one seeded trial and collect its trace."""
    ga = config.ga
    record = config.record
    fitness = build_fitness(config.fitness, ga.seed, trial)
    streams = trial_streams(ga.seed, trial)
    pop = init_population(ga, fitness.span, streams.init)
    state: Optional[ClampState] = None

    generations = ga.generations
    avg = np.empty(generations)
    best = np.empty(generations)
    unmutated = np.zeros(generations, dtype=np.int64) if record.unmutated_loci else None
    one_freqs = (
        np.empty((generations, fitness.span)) if record.one_frequencies else None
    )

    depth = 0
    descriptor = None
    stage_freqs = step_freqs = None
    if record.track_steps and isinstance(
        config.fitness, (StaircaseSpec, MultiStaircaseSpec)
    ):
        descriptor = config.fitness.descriptor
        depth = min(record.track_steps, descriptor.height)
        if isinstance(descriptor, MultiStaircaseDescriptor):
            shape = (generations, descriptor.cardinality, depth)
        else:
            shape = (generations, depth)
        stage_freqs = np.empty(shape)
        step_freqs = np.empty(shape)

    for g in range(generations):
        if depth:
            stages, steps = stage_step_frequencies(pop, descriptor)
            stage_freqs[g] = stages[..., :depth]
            step_freqs[g] = steps[..., :depth]
        pop, state, rec = step_generation(
            pop,
            fitness,
            ga,
            state,
            streams,
            want_one_frequencies=record.one_frequencies,
        )
        avg[g] = rec.avg_fitness
        best[g] = rec.best_fitness
        if unmutated is not None:
            unmutated[g] = rec.unmutated_loci
        if one_freqs is not None:
            one_freqs[g] = rec.one_frequencies

    if not (np.isfinite(avg).all() and np.isfinite(best).all()):
        raise ValueError("non-finite fitness metrics in trace")
    return RunTrace(
        trial=trial,
        seed=ga.seed,
        config_digest=config_digest(config),
        avg_fitness=avg,
        best_fitness=best,
        unmutated_loci=unmutated,
        stage_frequencies=stage_freqs,
        step_frequencies=step_freqs,
        one_frequencies=one_freqs,
    )


def run_experiment(
    config: ExperimentConfig,
    out_dir: Union[str, Path, None] = None,
    jobs: int = 1,
) -> tuple[list[RunTrace], "Aggregate"]:
    """Run every trial, write traces and the aggregate, return both.

    Trials are independent and may run in parallel (``jobs`` worker
    processes); results are identical either way. Trace files are flushed to
    ``out_dir`` as trials complete, so a failing trial leaves the finished
    ones on disk.
    """
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

    def flush(trace: RunTrace) -> None:
        if out is not None:
            write_trace_csv(trace, out / f"trial_{trace.trial:03d}.csv")

    traces: list[RunTrace] = []
    if jobs > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(run_trial, config, trial)
                for trial in range(config.trials)
            ]
            done, not_done = wait(futures, return_when=FIRST_EXCEPTION)
            for future in not_done:
                future.cancel()
            failure: Optional[BaseException] = None
            for future in done:
                exc = future.exception()
                if exc is not None:
                    failure = failure or exc
                    continue
                trace = future.result()
                flush(trace)
                traces.append(trace)
            if failure is not None:
                raise failure
    else:
        for trial in range(config.trials):
            trace = run_trial(config, trial)
            flush(trace)
            traces.append(trace)

    traces.sort(key=lambda t: t.trial)
    aggregate = aggregate_traces(traces)
    if out is not None:
        write_aggregate_csv(aggregate, out / "aggregate.csv")
    return traces, aggregate


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


@dataclass
class Aggregate:
    """Per-generation mean and standard error of each scalar metric.

    ``columns`` maps ``<metric>_mean`` and ``<metric>_stderr`` to (G,)
    arrays. Per-locus one-frequencies are not aggregated; they stay in the
    per-trial traces.
    """

    trials: int
    columns: dict[str, np.ndarray]

    @property
    def generations(self) -> int:
        return next(iter(self.columns.values())).shape[0]


def _metric_columns(trace: RunTrace) -> dict[str, np.ndarray]:
    cols: dict[str, np.ndarray] = {
        "avg_fitness": trace.avg_fitness,
        "best_fitness": trace.best_fitness,
    }
    if trace.unmutated_loci is not None:
        cols["unmutated_loci"] = trace.unmutated_loci
    for prefix, data in (
        ("stage", trace.stage_frequencies),
        ("step", trace.step_frequencies),
    ):
        if data is None:
            continue
        if data.ndim == 2:
            for i in range(data.shape[1]):
                cols[f"{prefix}_{i + 1}"] = data[:, i]
        else:
            for k in range(data.shape[1]):
                for i in range(data.shape[2]):
                    cols[f"ladder{k + 1}_{prefix}_{i + 1}"] = data[:, k, i]
    return cols


def aggregate_traces(traces: list[RunTrace]) -> Aggregate:
    """Mean and standard error across trials of every recorded metric.

    The standard error is the sample (divide-by-n-1) standard deviation
    across trials divided by sqrt(trials); zero when there is one trial.
    """
    if not traces:
        raise ValueError("no traces to aggregate")
    per_trial = [_metric_columns(t) for t in traces]
    names = list(per_trial[0])
    generations = traces[0].generations
    for cols, trace in zip(per_trial, traces):
        if list(cols) != names or trace.generations != generations:
            raise ValueError("trace shapes differ across trials")
    n = len(traces)
    out: dict[str, np.ndarray] = {}
    for name in names:
        stacked = np.stack([cols[name] for cols in per_trial]).astype(np.float64)
        out[f"{name}_mean"] = stacked.mean(axis=0)
        if n > 1:
            out[f"{name}_stderr"] = stacked.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            out[f"{name}_stderr"] = np.zeros(generations)
    return Aggregate(trials=n, columns=out)


# ---------------------------------------------------------------------------
# CSV persistence. Floats are written with repr(), the shortest string that
# round-trips the exact double, so written files are byte-stable and re-read
# values are bit-identical.
# ---------------------------------------------------------------------------


def _format(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_trace_csv(trace: RunTrace, path: Union[str, Path]) -> None:
    """Write one trial's trace; ``read_trace_csv`` inverts it exactly."""
    cols = _metric_columns(trace)
    span = None
    if trace.one_frequencies is not None:
        span = trace.one_frequencies.shape[1]
        for i in range(span):
            cols[f"freq_{i + 1}"] = trace.one_frequencies[:, i]
    int_cols = {"unmutated_loci"}
    with open(path, "w", newline="") as fh:
        fh.write(f"# seed: {trace.seed}\n")
        fh.write(f"# trial: {trace.trial}\n")
        fh.write(f"# config: {trace.config_digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", *cols])
        for g in range(trace.generations):
            row = [str(g)]
            for name, data in cols.items():
                row.append(
                    str(int(data[g])) if name in int_cols else _format(data[g])
                )
            writer.writerow(row)


def read_trace_csv(path: Union[str, Path]) -> RunTrace:
    """Reconstruct a RunTrace from a trace file."""
    meta = {"seed": 0, "trial": 0, "config": ""}
    rows = []
    header: list[str] = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            reader = csv.reader([line] + list(fh))
            header = next(reader)
            rows = [r for r in reader if r]
            break
    if not header or header[0] != "generation":
        raise ValueError(f"{path} is not a trace file")
    data = np.array(rows, dtype=np.float64)
    by_name = {name: data[:, i] for i, name in enumerate(header)}

    def group(prefix: str) -> Optional[np.ndarray]:
        picked = [n for n in header if n.startswith(prefix)]
        if not picked:
            return None
        return np.stack([by_name[n] for n in picked], axis=1)

    stage = _regroup_ladders(header, by_name, "stage")
    step = _regroup_ladders(header, by_name, "step")
    unmut = by_name.get("unmutated_loci")
    return RunTrace(
        trial=int(meta["trial"]),
        seed=int(meta["seed"]),
        config_digest=str(meta["config"]),
        avg_fitness=by_name["avg_fitness"],
        best_fitness=by_name["best_fitness"],
        unmutated_loci=None if unmut is None else unmut.astype(np.int64),
        stage_frequencies=stage,
        step_frequencies=step,
        one_frequencies=group("freq_"),
    )


def _regroup_ladders(
    header: list[str], by_name: dict[str, np.ndarray], prefix: str
) -> Optional[np.ndarray]:
    flat = [n for n in header if n.startswith(f"{prefix}_")]
    laddered = [n for n in header if n.startswith("ladder") and f"_{prefix}_" in n]
    if flat:
        return np.stack([by_name[n] for n in flat], axis=1)
    if laddered:
        ladders = sorted({int(n.split("_")[0][6:]) for n in laddered})
        depth = len(laddered) // len(ladders)
        out = np.empty((next(iter(by_name.values())).shape[0], len(ladders), depth))
        for k in ladders:
            for i in range(depth):
                out[:, k - 1, i] = by_name[f"ladder{k}_{prefix}_{i + 1}"]
        return out
    return None


def write_aggregate_csv(aggregate: Aggregate, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# trials: {aggregate.trials}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", *aggregate.columns])
        for g in range(aggregate.generations):
            writer.writerow(
                [str(g), *(_format(col[g]) for col in aggregate.columns.values())]
            )


def read_aggregate_csv(path: Union[str, Path]) -> Aggregate:
    trials = 1
    rows = []
    header: list[str] = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                if key.strip() == "trials":
                    trials = int(value)
                continue
            reader = csv.reader([line] + list(fh))
            header = next(reader)
            rows = [r for r in reader if r]
            break
    data = np.array(rows, dtype=np.float64)
    columns = {name: data[:, i] for i, name in enumerate(header) if name != "generation"}
    return Aggregate(trials=trials, columns=columns)


# ---------------------------------------------------------------------------
# Symmetry equivalence check: a staircase function with scrambled loci and
# mixed targets is, under the basic-frame transform, the same function as its
# canonical form, so GA dynamics on the two are identically distributed. The
# check verifies the noise-free identity exhaustively and compares the mean
# average-fitness curves of independent GA runs statistically.
# ---------------------------------------------------------------------------


def scrambled_test_descriptor() -> StaircaseDescriptor:
    """A fixed scrambled-loci, mixed-target staircase over 12 loci."""
    return StaircaseDescriptor(
        height=3,
        order=2,
        increment=1.0,
        noisiness=1.0,
        span=12,
        loci=np.array([[3, 11], [1, 7], [5, 9]]),
        targets=np.array([[1, 0], [0, 1], [1, 1]]),
    )


@dataclass
class SymmetryReport:
    exhaustive_ok: bool
    max_z: float
    z_threshold: float
    generations: int
    trials: int

    @property
    def passed(self) -> bool:
        return self.exhaustive_ok and self.max_z < self.z_threshold


def run_symmetry_check(
    seed: int = 0,
    trials: int = 50,
    generations: int = 100,
    population: int = 100,
    descriptor: Optional[StaircaseDescriptor] = None,
    z_threshold: float = 3.0,
) -> SymmetryReport:
    """Verify behavioural equivalence of a descriptor and its basic form.

    Exhaustive part: the noise-free fitness of every genome equals the
    noise-free fitness of its basic-frame transform under the basic form.
    Statistical part: mean average-fitness curves of two independent GA runs
    (one per function, ``trials`` trials each) stay within ``z_threshold``
    pooled standard errors at every generation.
    """
    d = descriptor if descriptor is not None else scrambled_test_descriptor()
    basic = basic_form(d)
    transform = transform_to_basic_frame(d)

    genomes = all_bitstrings(d.span)
    mapped = transform.apply(genomes)[:, : basic.span]
    exhaustive_ok = bool(
        np.array_equal(d.expected_fitness(genomes), basic.expected_fitness(mapped))
    )

    def curves(spec_descriptor, master_seed):
        config = ExperimentConfig(
            fitness=StaircaseSpec(spec_descriptor)
            if isinstance(spec_descriptor, StaircaseDescriptor)
            else MultiStaircaseSpec(spec_descriptor),
            ga=GaConfig(
                population_size=population,
                generations=generations,
                seed=master_seed,
            ),
            trials=trials,
        )
        traces, _ = run_experiment(config)
        stacked = np.stack([t.avg_fitness for t in traces])
        mean = stacked.mean(axis=0)
        stderr = stacked.std(axis=0, ddof=1) / np.sqrt(trials)
        return mean, stderr

    mean_d, se_d = curves(d, seed)
    mean_b, se_b = curves(basic, seed + 1)
    pooled = np.sqrt(se_d**2 + se_b**2)
    z = np.abs(mean_d - mean_b) / np.maximum(pooled, 1e-12)
    return SymmetryReport(
        exhaustive_ok=exhaustive_ok,
        max_z=float(z.max()),
        z_threshold=z_threshold,
        generations=generations,
        trials=trials,
    )
