"""Generational bitstring GA engine.

One generation is, in order: evaluate the population (stochastic fitness
functions re-sample their noise on every query), record metrics, update the
clamping state from the start-of-generation one-frequencies, sigma-scale the
raw fitnesses, select N parents by stochastic universal sampling, shuffle and
pair the parents, recombine each pair by uniform crossover (or copy), then
bit-flip mutate every child honoring the clamp mask. Replacement is wholesale:
no elitism.

Clamping masks mutation at loci whose one-frequency has stayed extreme for a
configured number of consecutive generations, letting long-fixed loci go to
strict fixation instead of being re-randomized by mutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .rng import TrialStreams


class FitnessFunction(Protocol):
    """What the engine needs from a fitness function."""

    @property
    def span(self) -> int: ...

    def evaluate_batch(
        self, genomes: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray: ...


@dataclass(frozen=True)
class ClampingConfig:
    """Parameters of the frequency-based mutation-masking test.

    A locus is flagged when its one-frequency drops below ``flag_freq`` or
    rises above ``1 - flag_freq``; it stays flagged while the frequency is
    below ``unflag_freq`` or above ``1 - unflag_freq``; after ``flag_period``
    consecutive flagged generations it is masked from mutation.
    """

    flag_freq: float = 0.01
    unflag_freq: float = 0.1
    flag_period: int = 200

    def __post_init__(self) -> None:
        if not 0.0 <= self.flag_freq <= 0.5:
            raise ValueError("flag_freq must lie in [0, 0.5]")
        if not self.flag_freq <= self.unflag_freq <= 0.5:
            raise ValueError("unflag_freq must lie in [flag_freq, 0.5]")
        if self.flag_period < 1:
            raise ValueError("flag_period must be a positive integer")


@dataclass(frozen=True)
class GaConfig:
    """Every knob of the engine. Defaults follow the standard configuration:
    population 500, per-bit mutation rate 0.003, crossover probability 1."""

    population_size: int = 500
    mutation_rate: float = 0.003
    crossover: str = "uniform"  # "uniform" | "none"
    crossover_probability: float = 1.0
    generations: int = 2500
    seed: int = 0
    clamping: Optional[ClampingConfig] = None

    def __post_init__(self) -> None:
        if self.population_size < 1:
            raise ValueError("population_size must be positive")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.crossover not in ("uniform", "none"):
            raise ValueError("crossover must be 'uniform' or 'none'")
        if not 0.0 <= self.crossover_probability <= 1.0:
            raise ValueError("crossover_probability must lie in [0, 1]")
        if self.generations < 1:
            raise ValueError("generations must be positive")


@dataclass(frozen=True)
class ClampState:
    """Per-locus flagging state. Treated as immutable; updates return a new
    state. ``masked`` is always ``flagged & (run_lengths >= flag_period)``."""

    flagged: np.ndarray  # (span,) bool
    run_lengths: np.ndarray  # (span,) int64, consecutive flagged generations
    masked: np.ndarray  # (span,) bool

    @classmethod
    def fresh(cls, span: int) -> "ClampState":
        return cls(
            flagged=np.zeros(span, dtype=bool),
            run_lengths=np.zeros(span, dtype=np.int64),
            masked=np.zeros(span, dtype=bool),
        )


@dataclass
class Population:
    """An ordered multiset of equal-length genomes."""

    genomes: np.ndarray  # (size, span) uint8
    generation: int = 0

    @property
    def size(self) -> int:
        return self.genomes.shape[0]

    @property
    def span(self) -> int:
        return self.genomes.shape[1]


@dataclass
class GenerationRecord:
    """Metrics of one generation, measured on the population as evaluated."""

    generation: int
    avg_fitness: float
    best_fitness: float
    unmutated_loci: int
    selection_fallback: bool
    one_frequencies: Optional[np.ndarray] = None


def init_population(
    config: GaConfig, span: int, rng: np.random.Generator
) -> Population:
    """Draw the generation-0 population, each bit i.i.d. uniform on {0, 1}."""
    if span < 1:
        raise ValueError("span must be positive")
    genomes = rng.integers(0, 2, size=(config.population_size, span), dtype=np.uint8)
    return Population(genomes=genomes, generation=0)


def sigma_scale(raw_fitnesses: np.ndarray) -> np.ndarray:
    """Adjust raw fitnesses to ``max(0, 1 + (f - mean) / sd)``.

    ``sd`` is the population (divide-by-N) standard deviation. When the
    population has zero fitness variance every adjusted value is 1, so
    selection degenerates to uniform.
    """
    raw = np.asarray(raw_fitnesses, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("sigma_scale needs a non-empty fitness sequence")
    sd = float(raw.std())
    if sd == 0.0:
        return np.ones_like(raw)
    return np.maximum(0.0, 1.0 + (raw - raw.mean()) / sd)


def sus_select(
    adjusted_fitnesses: np.ndarray, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, bool]:
    """Stochastic universal sampling: ``count`` equally spaced pointers.

    Returns ``(indices, fallback)``. Each index i is selected between
    ``floor(count * f_i / total)`` and ``ceil(count * f_i / total)`` times.
    If every adjusted fitness is zero the selection falls back to uniform
    random indices and ``fallback`` is True; runs are never aborted for a
    degenerate fitness vector.
    """
    weights = np.asarray(adjusted_fitnesses, dtype=np.float64)
    if count < 1:
        raise ValueError("count must be positive")
    if weights.size == 0:
        raise ValueError("sus_select needs at least one fitness value")
    if np.any(weights < 0):
        raise ValueError("adjusted fitnesses must be non-negative")
    total = float(weights.sum())
    if total <= 0.0:
        return rng.integers(0, weights.size, size=count), True
    spacing = total / count
    points = rng.random() * spacing + spacing * np.arange(count)
    cumulative = np.cumsum(weights)
    indices = np.searchsorted(cumulative, points, side="right")
    return np.minimum(indices, weights.size - 1), False


def uniform_crossover(
    a: np.ndarray, b: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Recombine two genomes: each locus swaps with probability 0.5.

    The children are complementary reassortments: wherever child one takes
    a's bit, child two takes b's.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError("parents must have equal length")
    swap = rng.random(a.shape[0]) < 0.5
    return np.where(swap, b, a), np.where(swap, a, b)


def mutate(
    genome: np.ndarray,
    rate: float,
    rng: np.random.Generator,
    mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Flip each unmasked locus independently with probability ``rate``."""
    genome = np.asarray(genome, dtype=np.uint8)
    return mutate_batch(genome[None, :], rate, rng, mask=mask)[0]


def mutate_batch(
    genomes: np.ndarray,
    rate: float,
    rng: np.random.Generator,
    mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Vectorized bit-flip mutation over a (N, span) population array."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    if mask is not None and mask.shape[0] != genomes.shape[1]:
        raise ValueError("mask length must equal genome length")
    # float32 uniforms: half the memory traffic of float64, resolution 2^-24
    # is far below any rate distinguishable at these sample sizes.
    flips = rng.random(genomes.shape, dtype=np.float32) < rate
    if mask is not None:
        flips &= ~mask
    return genomes ^ flips.view(np.uint8)


def clamp_update(
    state: ClampState, one_frequencies: np.ndarray, config: ClampingConfig
) -> ClampState:
    """Advance the per-locus flagging state machine by one generation.

    Unflagged loci are flagged when their one-frequency is below
    ``flag_freq`` or above ``1 - flag_freq`` (run length starts at 1).
    Flagged loci stay flagged while the frequency is below ``unflag_freq``
    or above ``1 - unflag_freq`` (run length increments), and are unflagged
    otherwise (run length resets to 0). A locus is masked once it has been
    flagged for at least ``flag_period`` consecutive generations.
    """
    freq = np.asarray(one_frequencies, dtype=np.float64)
    beyond_flag = (freq < config.flag_freq) | (freq > 1.0 - config.flag_freq)
    beyond_unflag = (freq < config.unflag_freq) | (freq > 1.0 - config.unflag_freq)
    newly = ~state.flagged & beyond_flag
    kept = state.flagged & beyond_unflag
    flagged = newly | kept
    run_lengths = np.where(
        newly, 1, np.where(kept, state.run_lengths + 1, 0)
    ).astype(np.int64)
    masked = flagged & (run_lengths >= config.flag_period)
    return ClampState(flagged=flagged, run_lengths=run_lengths, masked=masked)


def step_generation(
    pop: Population,
    fitness: FitnessFunction,
    config: GaConfig,
    state: Optional[ClampState],
    streams: TrialStreams,
    want_one_frequencies: bool = False,
) -> tuple[Population, Optional[ClampState], GenerationRecord]:
    """Advance the population by one full generation.

    Returns the offspring population, the advanced clamp state (None when
    clamping is disabled), and the metrics of the incoming population.
    """
    genomes = pop.genomes
    n, span = genomes.shape
    if fitness.span != span:
        raise ValueError("fitness span does not match genome length")

    raw = fitness.evaluate_batch(genomes, streams.noise)

    freqs: Optional[np.ndarray] = None
    if config.clamping is not None or want_one_frequencies:
        freqs = genomes.mean(axis=0)

    mask: Optional[np.ndarray] = None
    if config.clamping is not None:
        if state is None:
            state = ClampState.fresh(span)
        state = clamp_update(state, freqs, config.clamping)
        mask = state.masked

    adjusted = sigma_scale(raw)
    parent_idx, fallback = sus_select(adjusted, n, streams.select)

    order = streams.crossover.permutation(n)
    children = genomes[parent_idx[order]]

    if config.crossover == "uniform" and n >= 2:
        n_pairs = n // 2
        first = children[0 : 2 * n_pairs : 2]
        second = children[1 : 2 * n_pairs : 2]
        crossed = streams.crossover.random(n_pairs) < config.crossover_probability
        swap = streams.crossover.random((n_pairs, span), dtype=np.float32) < 0.5
        swap &= crossed[:, None]
        # complementary reassortment via xor: where swap is set the pair
        # exchanges bits, elsewhere both children keep their parent's bit
        diff = (first ^ second) & swap.view(np.uint8)
        first ^= diff
        second ^= diff
        # an odd leftover parent is carried over as a plain copy

    children = mutate_batch(children, config.mutation_rate, streams.mutation, mask=mask)

    record = GenerationRecord(
        generation=pop.generation,
        avg_fitness=float(raw.mean()),
        best_fitness=float(raw.max()),
        unmutated_loci=int(mask.sum()) if mask is not None else 0,
        selection_fallback=fallback,
        one_frequencies=freqs,
    )
    return Population(genomes=children, generation=pop.generation + 1), state, record
