"""Deterministic random-stream management.

Every run is driven by a single 64-bit master seed. The master seed is
mixed with a trial index and a purpose slot through
``SeedSequence(master_seed, spawn_key=(trial, slot))``, giving one
independent PCG64 stream per (trial, purpose) pair. Because the mixing is
a pure function of the triple, any trial subset can be reproduced without
running the others, and operator-level draws (selection, crossover,
mutation, ...) never interleave, so component behaviour is reproducible in
isolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Fixed purpose slots. Appending new purposes is allowed; reordering is not,
# since the slot index feeds the spawn key.
PURPOSES = ("init", "noise", "select", "crossover", "mutation", "instance")


def stream(master_seed: int, trial: int, purpose: str) -> np.random.Generator:
    """Return the named substream for one trial of a seeded run.

    Args:
        master_seed: The run's master seed.
        trial: Trial index (0-based).
        purpose: One of ``PURPOSES``.
    """
    slot = PURPOSES.index(purpose)
    seq = np.random.SeedSequence(master_seed, spawn_key=(trial, slot))
    return np.random.default_rng(seq)


@dataclass
class TrialStreams:
    """The per-purpose generators owned by a single trial."""

    init: np.random.Generator
    noise: np.random.Generator
    select: np.random.Generator
    crossover: np.random.Generator
    mutation: np.random.Generator


def trial_streams(master_seed: int, trial: int = 0) -> TrialStreams:
    """Build the full stream bundle for one trial."""
    return TrialStreams(
        init=stream(master_seed, trial, "init"),
        noise=stream(master_seed, trial, "noise"),
        select=stream(master_seed, trial, "select"),
        crossover=stream(master_seed, trial, "crossover"),
        mutation=stream(master_seed, trial, "mutation"),
    )
