"""Staircase and multi-staircase stochastic fitness functions.

A staircase function walks an ordered ladder of stages. Stage i is a target
bit pattern (row i of ``targets``) at fixed loci (row i of ``loci``). Each
query draws one Gaussian noise value, then walks the stages in order: a
matching stage adds ``increment``; the first mismatch subtracts
``increment / (2**order - 1)`` and ends the walk. A multi-staircase holds
several disjoint ladders that share one noise draw per query and are walked
independently, their contributions adding.

Loci indices are 1-based in descriptors, descriptor files, and all public
interfaces. Loci not mentioned by any ladder are never read, so the value of
the function is independent of the span beyond containing its ladders.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np


def _check_matrices(
    loci: np.ndarray, targets: np.ndarray, span: int, shape: tuple[int, ...]
) -> None:
    """Shared descriptor validation; raises ValueError naming the constraint."""
    if loci.shape != shape:
        raise ValueError(f"loci matrix must have shape {shape}, got {loci.shape}")
    if targets.shape != shape:
        raise ValueError(f"targets matrix must have shape {shape}, got {targets.shape}")
    if loci.min() < 1 or loci.max() > span:
        raise ValueError(f"loci must be integers in [1, {span}]")
    flat = loci.reshape(-1)
    if np.unique(flat).size != flat.size:
        raise ValueError("loci must be pairwise distinct integers")
    rows = loci.reshape(-1, shape[-1])
    if shape[-1] > 1 and np.any(np.diff(rows, axis=1) <= 0):
        raise ValueError("each loci row must be sorted in ascending order")
    if not np.isin(targets, (0, 1)).all():
        raise ValueError("targets must be binary digits")


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(values, dtype=dtype))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StaircaseDescriptor:
    """A single-ladder staircase fitness function.

    Attributes:
        height: Number of stages.
        order: Bits per stage.
        increment: Fitness gained per matched stage.
        noisiness: Standard deviation of the additive Gaussian noise.
        span: Genome length the function is defined over.
        loci: (height, order) matrix of 1-based locus indices; rows ascending,
            all entries distinct.
        targets: (height, order) binary matrix of stage target patterns.
    """

    height: int
    order: int
    increment: float
    noisiness: float
    span: int
    loci: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        if self.height < 1 or self.order < 1 or self.span < 1:
            raise ValueError("height, order, and span must be positive integers")
        if self.increment <= 0:
            raise ValueError("increment must be positive")
        if self.noisiness < 0:
            raise ValueError("noisiness must be non-negative")
        object.__setattr__(self, "loci", _frozen_array(self.loci, np.int64))
        object.__setattr__(self, "targets", _frozen_array(self.targets, np.uint8))
        _check_matrices(self.loci, self.targets, self.span, (self.height, self.order))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StaircaseDescriptor):
            return NotImplemented
        return (
            (self.height, self.order, self.increment, self.noisiness, self.span)
            == (other.height, other.order, other.increment, other.noisiness, other.span)
            and np.array_equal(self.loci, other.loci)
            and np.array_equal(self.targets, other.targets)
        )

    @property
    def miss_penalty(self) -> float:
        return self.increment / (2**self.order - 1)

    def evaluate(self, genome: np.ndarray, rng: np.random.Generator) -> float:
        """Query the function once, with a fresh noise draw."""
        genome = np.asarray(genome, dtype=np.uint8)
        if genome.shape != (self.span,):
            raise ValueError("genome length does not match descriptor span")
        y = float(rng.standard_normal()) * self.noisiness
        for i in range(self.height):
            if np.array_equal(genome[self.loci[i] - 1], self.targets[i]):
                y += self.increment
            else:
                y -= self.miss_penalty
                break
        return y

    def expected_fitness(self, genomes: np.ndarray) -> np.ndarray:
        """Noise-free core, which equals the expected fitness per genome."""
        genomes = np.atleast_2d(np.asarray(genomes, dtype=np.uint8))
        if genomes.shape[1] != self.span:
            raise ValueError("genome length does not match descriptor span")
        steps = _steps_matched(genomes, self.loci[None], self.targets[None])[:, 0]
        return steps * self.increment - (steps < self.height) * self.miss_penalty

    def evaluate_batch(
        self, genomes: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        """Query once per genome; every query gets an independent noise draw."""
        core = self.expected_fitness(genomes)
        return core + rng.standard_normal(core.shape[0]) * self.noisiness


@dataclass(frozen=True, eq=False)
class MultiStaircaseDescriptor:
    """Several disjoint staircase ladders over one genome.

    ``loci`` and ``targets`` have shape (cardinality, height, order). All loci
    across all ladders are distinct. Each query draws a single noise value and
    walks every ladder independently.
    """

    cardinality: int
    height: int
    order: int
    increment: float
    noisiness: float
    span: int
    loci: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        if self.cardinality < 1:
            raise ValueError("cardinality must be a positive integer")
        if self.height < 1 or self.order < 1 or self.span < 1:
            raise ValueError("height, order, and span must be positive integers")
        if self.increment <= 0:
            raise ValueError("increment must be positive")
        if self.noisiness < 0:
            raise ValueError("noisiness must be non-negative")
        object.__setattr__(self, "loci", _frozen_array(self.loci, np.int64))
        object.__setattr__(self, "targets", _frozen_array(self.targets, np.uint8))
        _check_matrices(
            self.loci,
            self.targets,
            self.span,
            (self.cardinality, self.height, self.order),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiStaircaseDescriptor):
            return NotImplemented
        return (
            (self.cardinality, self.height, self.order, self.increment,
             self.noisiness, self.span)
            == (other.cardinality, other.height, other.order, other.increment,
                other.noisiness, other.span)
            and np.array_equal(self.loci, other.loci)
            and np.array_equal(self.targets, other.targets)
        )

    @property
    def miss_penalty(self) -> float:
        return self.increment / (2**self.order - 1)

    def evaluate(self, genome: np.ndarray, rng: np.random.Generator) -> float:
        genome = np.asarray(genome, dtype=np.uint8)
        if genome.shape != (self.span,):
            raise ValueError("genome length does not match descriptor span")
        y = float(rng.standard_normal()) * self.noisiness
        for ladder in range(self.cardinality):
            for i in range(self.height):
                if np.array_equal(
                    genome[self.loci[ladder, i] - 1], self.targets[ladder, i]
                ):
                    y += self.increment
                else:
                    y -= self.miss_penalty
                    break
        return y

    def expected_fitness(self, genomes: np.ndarray) -> np.ndarray:
        genomes = np.atleast_2d(np.asarray(genomes, dtype=np.uint8))
        if genomes.shape[1] != self.span:
            raise ValueError("genome length does not match descriptor span")
        steps = _steps_matched(genomes, self.loci, self.targets)  # (N, c)
        per_ladder = steps * self.increment - (steps < self.height) * self.miss_penalty
        return per_ladder.sum(axis=1)

    def evaluate_batch(
        self, genomes: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        core = self.expected_fitness(genomes)
        return core + rng.standard_normal(core.shape[0]) * self.noisiness


Descriptor = Union[StaircaseDescriptor, MultiStaircaseDescriptor]


def _steps_matched(
    genomes: np.ndarray, loci: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Consecutively matched stage count per ladder.

    Args:
        genomes: (N, span) uint8.
        loci: (ladders, height, order) 1-based.
        targets: same shape, binary.

    Returns:
        (N, ladders) int64: for each genome and ladder, the number of leading
        stages whose projection equals the target row.
    """
    projected = genomes[:, loci - 1]  # (N, ladders, height, order)
    match = (projected == targets).all(axis=3)
    return np.cumprod(match, axis=2).sum(axis=2)


def stage_matches(genomes: np.ndarray, descriptor: Descriptor) -> np.ndarray:
    """Per-stage match flags: (N, height) for a single ladder, else
    (N, cardinality, height)."""
    genomes = np.atleast_2d(np.asarray(genomes, dtype=np.uint8))
    if isinstance(descriptor, StaircaseDescriptor):
        projected = genomes[:, descriptor.loci - 1]
        return (projected == descriptor.targets).all(axis=2)
    projected = genomes[:, descriptor.loci - 1]
    return (projected == descriptor.targets).all(axis=3)


def make_basic(
    height: int, order: int, increment: float, noisiness: float
) -> StaircaseDescriptor:
    """The canonical layout: span = height*order, loci laid out row-wise
    1..height*order, targets all ones."""
    span = height * order
    loci = np.arange(1, span + 1, dtype=np.int64).reshape(height, order)
    targets = np.ones((height, order), dtype=np.uint8)
    return StaircaseDescriptor(height, order, increment, noisiness, span, loci, targets)


def make_basic_multi(
    cardinality: int, height: int, order: int, increment: float, noisiness: float
) -> MultiStaircaseDescriptor:
    """Canonical multi-ladder layout: ladder k occupies the contiguous block
    of loci height*order*(k-1)+1 .. height*order*k, targets all ones."""
    span = cardinality * height * order
    loci = np.arange(1, span + 1, dtype=np.int64).reshape(cardinality, height, order)
    targets = np.ones((cardinality, height, order), dtype=np.uint8)
    return MultiStaircaseDescriptor(
        cardinality, height, order, increment, noisiness, span, loci, targets
    )


def basic_form(descriptor: Descriptor) -> Descriptor:
    """The canonical-layout function with the same shape parameters."""
    if isinstance(descriptor, StaircaseDescriptor):
        return make_basic(
            descriptor.height, descriptor.order, descriptor.increment,
            descriptor.noisiness,
        )
    return make_basic_multi(
        descriptor.cardinality, descriptor.height, descriptor.order,
        descriptor.increment, descriptor.noisiness,
    )


def is_basic(descriptor: Descriptor) -> bool:
    return descriptor == basic_form(descriptor)


@dataclass(frozen=True)
class BasicFrameTransform:
    """Genome-space map under which a descriptor becomes its basic form.

    Position k of the transformed genome reads source locus
    ``source_loci[k]`` (1-based) and complements it where ``complement`` is
    set. The transform reorders the ladder loci into the canonical row-wise
    layout and complements loci whose target bit is 0; the unused loci follow
    in ascending order, unchanged.
    """

    source_loci: np.ndarray  # (span,) int64, a permutation of 1..span
    complement: np.ndarray  # (span,) bool

    def apply(self, genomes: np.ndarray) -> np.ndarray:
        """Transform one genome or a batch; output has the same shape."""
        genomes = np.asarray(genomes, dtype=np.uint8)
        out = genomes[..., self.source_loci - 1]
        return out ^ self.complement.astype(np.uint8)


def transform_to_basic_frame(descriptor: Descriptor) -> BasicFrameTransform:
    """Build the transform mapping ``descriptor`` onto its basic form.

    For every genome g, the noise-free fitness of g under the descriptor
    equals the noise-free fitness of the first height*order*cardinality bits
    of the transformed genome under the basic form, and with noise the two
    functions are identically distributed.
    """
    ladder_loci = descriptor.loci.reshape(-1)
    ladder_comp = descriptor.targets.reshape(-1) == 0
    rest = np.setdiff1d(np.arange(1, descriptor.span + 1), ladder_loci)
    source = np.concatenate([ladder_loci, rest])
    comp = np.concatenate([ladder_comp, np.zeros(rest.size, dtype=bool)])
    frozen_src = _frozen_array(source, np.int64)
    frozen_comp = np.ascontiguousarray(comp)
    frozen_comp.setflags(write=False)
    return BasicFrameTransform(source_loci=frozen_src, complement=frozen_comp)


# ---------------------------------------------------------------------------
# Descriptor files: a line-oriented key/value format, round-trippable.
#
#   height: 3            basic: 50 4 0.3 1
#   order: 2             basic_multi: 10 50 4 0.3 1
#   increment: 1.0
#   noisiness: 1.0
#   span: 12
#   loci:
#   3 11
#   1 7
#   5 9
#   targets:
#   1 0
#   0 1
#   1 1
#
# Multi-ladder files add "cardinality: c" and stack the per-ladder matrices
# vertically (cardinality*height rows). '#' starts a comment; blank lines are
# ignored.
# ---------------------------------------------------------------------------


def read_descriptor_file(path: Union[str, Path]) -> Descriptor:
    """Parse a descriptor file (full form or one-line basic shorthand)."""
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)

    scalars: dict[str, str] = {}
    matrices: dict[str, list[list[int]]] = {}
    current: Union[str, None] = None
    for line in lines:
        if ":" in line:
            key, _, value = line.partition(":")
            key = key.strip().lower()
            value = value.strip()
            if key in ("loci", "targets") and not value:
                matrices[key] = []
                current = key
                continue
            scalars[key] = value
            current = None
        elif current is not None:
            matrices[current].append([int(tok) for tok in line.split()])
        else:
            raise ValueError(f"unexpected line in descriptor file: {line!r}")

    if "basic" in scalars:
        parts = scalars["basic"].split()
        if len(parts) != 4:
            raise ValueError("basic shorthand needs: height order increment noisiness")
        return make_basic(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]))
    if "basic_multi" in scalars:
        parts = scalars["basic_multi"].split()
        if len(parts) != 5:
            raise ValueError(
                "basic_multi shorthand needs: cardinality height order increment noisiness"
            )
        return make_basic_multi(
            int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3]), float(parts[4])
        )

    for key in ("height", "order", "increment", "noisiness", "span"):
        if key not in scalars:
            raise ValueError(f"descriptor file is missing '{key}'")
    for key in ("loci", "targets"):
        if key not in matrices:
            raise ValueError(f"descriptor file is missing the '{key}' matrix")

    height = int(scalars["height"])
    order = int(scalars["order"])
    increment = float(scalars["increment"])
    noisiness = float(scalars["noisiness"])
    span = int(scalars["span"])
    loci = np.array(matrices["loci"], dtype=np.int64)
    targets = np.array(matrices["targets"], dtype=np.uint8)

    if "cardinality" in scalars:
        c = int(scalars["cardinality"])
        return MultiStaircaseDescriptor(
            c, height, order, increment, noisiness, span,
            loci.reshape(c, height, order), targets.reshape(c, height, order),
        )
    return StaircaseDescriptor(height, order, increment, noisiness, span, loci, targets)


def write_descriptor_file(descriptor: Descriptor, path: Union[str, Path]) -> None:
    """Write the full (non-shorthand) form; read_descriptor_file inverts it."""
    out = []
    if isinstance(descriptor, MultiStaircaseDescriptor):
        out.append(f"cardinality: {descriptor.cardinality}")
    out.append(f"height: {descriptor.height}")
    out.append(f"order: {descriptor.order}")
    out.append(f"increment: {descriptor.increment!r}")
    out.append(f"noisiness: {descriptor.noisiness!r}")
    out.append(f"span: {descriptor.span}")
    for key in ("loci", "targets"):
        out.append(f"{key}:")
        matrix = getattr(descriptor, key).reshape(-1, descriptor.order)
        for row in matrix:
            out.append(" ".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(out) + "\n")
