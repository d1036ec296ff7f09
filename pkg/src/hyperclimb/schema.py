"""Schema machinery: projections, fitness signals, and population frequencies.

A schema partition is a tuple of distinct 1-based loci; a schema fixes a bit
pattern at those loci. The fitness signal of a schema is the expected fitness
of a genome drawn uniformly from it. Signals come in two independent routes:
closed-form values for staircase steps and stages, and an exact brute-force
expectation that enumerates the schema. The module also provides the
population-level stage/step and one-frequency statistics used in run traces.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bits import all_bitstrings, bits_to_int
from .staircase import (
    Descriptor,
    MultiStaircaseDescriptor,
    StaircaseDescriptor,
    make_basic,
    stage_matches,
)


@dataclass(frozen=True)
class SchemaPartition:
    """A tuple of distinct defining loci (1-based). May be empty, denoting
    the partition whose single schema is the whole space."""

    loci: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(x < 1 for x in self.loci):
            raise ValueError("partition loci are 1-based positive integers")
        if len(set(self.loci)) != len(self.loci):
            raise ValueError("partition loci must be distinct")

    @property
    def order(self) -> int:
        return len(self.loci)

    def orthogonal_to(self, other: "SchemaPartition") -> bool:
        return not set(self.loci) & set(other.loci)

    def concat(self, other: "SchemaPartition") -> "SchemaPartition":
        if not self.orthogonal_to(other):
            raise ValueError("can only concatenate orthogonal partitions")
        return SchemaPartition(self.loci + other.loci)


@dataclass(frozen=True)
class Schema:
    """A pattern of fixed bits over a schema partition."""

    partition: SchemaPartition
    pattern: str

    def __post_init__(self) -> None:
        if len(self.pattern) != self.partition.order:
            raise ValueError("pattern length must equal partition order")
        if any(ch not in "01" for ch in self.pattern):
            raise ValueError("pattern must consist of binary digits")

    def concat(self, other: "Schema") -> "Schema":
        return Schema(self.partition.concat(other.partition), self.pattern + other.pattern)

    @property
    def pattern_bits(self) -> np.ndarray:
        return np.frombuffer(self.pattern.encode(), dtype=np.uint8) - ord("0")


def project(genome: np.ndarray, partition: SchemaPartition) -> str:
    """Bits of the genome at the partition's loci, in tuple order."""
    genome = np.asarray(genome)
    if partition.order and max(partition.loci) > genome.shape[-1]:
        raise ValueError("partition locus out of genome range")
    idx = np.array(partition.loci, dtype=np.int64) - 1
    return "".join("1" if genome[i] else "0" for i in idx)


def schema_members(schema: Schema, span: int) -> np.ndarray:
    """All genomes of the given span belonging to the schema."""
    free = np.setdiff1d(
        np.arange(1, span + 1), np.array(schema.partition.loci, dtype=np.int64)
    )
    filler = all_bitstrings(free.size)
    genomes = np.zeros((filler.shape[0], span), dtype=np.uint8)
    if schema.partition.order:
        genomes[:, np.array(schema.partition.loci) - 1] = schema.pattern_bits
    if free.size:
        genomes[:, free - 1] = filler
    return genomes


def signal_bruteforce(descriptor: Descriptor, schema: Schema) -> float:
    """Exact fitness signal by enumerating every genome in the schema.

    The noise term is zero-mean, so the expectation equals the mean of the
    noise-free core over the schema's members. Enumeration is capped at
    2**20 genomes.
    """
    members = schema_members(schema, descriptor.span)
    return float(descriptor.expected_fitness(members).mean())


def conditional_signal_bruteforce(
    descriptor: Descriptor, schema: Schema, given: Schema
) -> float:
    """Signal of the joint schema minus the signal of the conditioning one."""
    return signal_bruteforce(descriptor, schema.concat(given)) - signal_bruteforce(
        descriptor, given
    )


def partition_signals(
    descriptor: Descriptor, partition: SchemaPartition
) -> np.ndarray:
    """Brute-force signal of every schema in a partition.

    Returns an array of length 2**order, indexed by the big-endian integer
    value of each schema's pattern. Enumerates the full genome space once.
    """
    genomes = all_bitstrings(descriptor.span)
    values = descriptor.expected_fitness(genomes)
    if partition.order == 0:
        return np.array([values.mean()])
    idx = bits_to_int(genomes[:, np.array(partition.loci) - 1])
    sums = np.bincount(idx, weights=values, minlength=2**partition.order)
    counts = np.bincount(idx, minlength=2**partition.order)
    return sums / counts


def stage_schema(descriptor: Descriptor, index: int, ladder: int = 1) -> Schema:
    """Stage ``index`` (1-based) as a schema, canonically denoted."""
    loci, targets = _ladder_rows(descriptor, ladder)
    if not 1 <= index <= descriptor.height:
        raise ValueError("stage index out of range")
    row = index - 1
    return Schema(
        SchemaPartition(tuple(int(x) for x in loci[row])),
        "".join(str(int(b)) for b in targets[row]),
    )


def step_schema(descriptor: Descriptor, index: int, ladder: int = 1) -> Schema:
    """Step ``index``: the conjunction of stages 1..index."""
    loci, targets = _ladder_rows(descriptor, ladder)
    if not 1 <= index <= descriptor.height:
        raise ValueError("step index out of range")
    flat_loci = tuple(int(x) for x in loci[:index].reshape(-1))
    flat_bits = "".join(str(int(b)) for b in targets[:index].reshape(-1))
    return Schema(SchemaPartition(flat_loci), flat_bits)


def _ladder_rows(descriptor: Descriptor, ladder: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(descriptor, MultiStaircaseDescriptor):
        if not 1 <= ladder <= descriptor.cardinality:
            raise ValueError("ladder index out of range")
        return descriptor.loci[ladder - 1], descriptor.targets[ladder - 1]
    if ladder != 1:
        raise ValueError("a single-ladder descriptor only has ladder 1")
    return descriptor.loci, descriptor.targets


def signal_analytic(descriptor: Descriptor, which: str, index: int) -> float:
    """Closed-form fitness signal of a step or stage.

    Step i has signal ``i * increment``; stage i has signal
    ``increment / (2**order) ** (i - 1)``, independent of the layout matrices.
    """
    if not 1 <= index <= descriptor.height:
        raise ValueError("index out of range")
    if which == "step":
        return index * descriptor.increment
    if which == "stage":
        return descriptor.increment / float((2**descriptor.order) ** (index - 1))
    raise ValueError("which must be 'step' or 'stage'")


def conditional_stage_signal_analytic(descriptor: Descriptor, index: int) -> float:
    """Closed-form conditional signal of stage i given step i-1: the
    increment, constant in i (valid for index >= 2)."""
    if not 2 <= index <= descriptor.height:
        raise ValueError("index must lie in [2, height]")
    return descriptor.increment


def snr_analytic(descriptor: Descriptor, which: str, index: int) -> float:
    """Signal-to-noise ratio of a step or stage: signal / noisiness."""
    if descriptor.noisiness == 0:
        raise ValueError("signal-to-noise ratio is undefined for zero noisiness")
    return signal_analytic(descriptor, which, index) / descriptor.noisiness


def conditional_stage_snr_analytic(descriptor: Descriptor, index: int) -> float:
    """Conditional SNR of stage i given step i-1: increment / noisiness."""
    if descriptor.noisiness == 0:
        raise ValueError("signal-to-noise ratio is undefined for zero noisiness")
    return conditional_stage_signal_analytic(descriptor, index) / descriptor.noisiness


def one_frequencies(pop) -> np.ndarray:
    """Per-locus frequency of the bit 1 in a population."""
    genomes = getattr(pop, "genomes", pop)
    genomes = np.asarray(genomes)
    if genomes.size == 0:
        raise ValueError("one_frequencies needs a non-empty population")
    return genomes.mean(axis=0)


def stage_step_frequencies(
    pop, descriptor: Descriptor
) -> tuple[np.ndarray, np.ndarray]:
    """Population frequency of every stage and step of a descriptor.

    Returns ``(stage_freq, step_freq)`` of shape (height,) for a single
    ladder and (cardinality, height) for a multi-ladder descriptor. Step i's
    frequency is the fraction of members matching all stages 1..i of the
    ladder, so it is non-increasing in i.
    """
    genomes = getattr(pop, "genomes", pop)
    genomes = np.atleast_2d(np.asarray(genomes, dtype=np.uint8))
    if genomes.shape[1] != descriptor.span:
        raise ValueError("population genome length does not match descriptor span")
    matches = stage_matches(genomes, descriptor)
    stage_freq = matches.mean(axis=0)
    step_freq = np.cumprod(matches, axis=-1).mean(axis=0)
    return stage_freq, step_freq


# ---------------------------------------------------------------------------
# Signal verification suite: closed-form values against the brute-force
# oracle, over a family of small basic descriptors.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignalCheck:
    """One comparison between a closed-form signal and its brute-force value."""

    height: int
    order: int
    increment: float
    kind: str  # "step" | "stage" | "conditional" | "complement-sum"
    index: int
    expected: float
    actual: float

    @property
    def error(self) -> float:
        return abs(self.actual - self.expected)

    def within(self, tolerance: float) -> bool:
        return self.error <= tolerance


def signal_check_suite(
    max_height: int = 4,
    max_order: int = 3,
    increments: Sequence[float] = (0.3, 1.0),
) -> list[SignalCheck]:
    """Compare brute-force signals against the closed forms.

    For every basic noise-free descriptor with height <= max_height and
    order <= max_order, checks: step signals (i * increment), stage signals
    (increment / (2**order)**(i-1)), conditional stage-given-previous-step
    signals (increment), and the complement sum: over the partition of step
    i, the signals of all schemata other than the step itself add up to
    -i * increment.
    """
    checks: list[SignalCheck] = []
    for height, order, increment in itertools.product(
        range(1, max_height + 1), range(1, max_order + 1), increments
    ):
        d = make_basic(height, order, increment, 0.0)
        for i in range(1, height + 1):
            checks.append(
                SignalCheck(
                    height, order, increment, "step", i,
                    expected=signal_analytic(d, "step", i),
                    actual=signal_bruteforce(d, step_schema(d, i)),
                )
            )
            checks.append(
                SignalCheck(
                    height, order, increment, "stage", i,
                    expected=signal_analytic(d, "stage", i),
                    actual=signal_bruteforce(d, stage_schema(d, i)),
                )
            )
            signals = partition_signals(d, step_schema(d, i).partition)
            step_idx = int(bits_to_int(step_schema(d, i).pattern_bits))
            others = math.fsum(signals) - float(signals[step_idx])
            checks.append(
                SignalCheck(
                    height, order, increment, "complement-sum", i,
                    expected=-i * increment,
                    actual=others,
                )
            )
        for i in range(2, height + 1):
            checks.append(
                SignalCheck(
                    height, order, increment, "conditional", i,
                    expected=conditional_stage_signal_analytic(d, i),
                    actual=conditional_signal_bruteforce(
                        d, stage_schema(d, i), step_schema(d, i - 1)
                    ),
                )
            )
    return checks
