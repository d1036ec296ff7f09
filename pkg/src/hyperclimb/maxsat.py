"""Random MAX 3-SAT instances, DIMACS CNF I/O, and satisfied-clause counting.

A genome encodes a variable assignment: bit i is the value of variable i+1.
Fitness is the number of clauses with at least one true literal. Clauses hold
exactly three literals over three distinct variables; duplicate clauses across
the instance are allowed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np


@dataclass(frozen=True, eq=False)
class Sat3Instance:
    """A 3-CNF formula: ``literals[c]`` holds the three signed DIMACS-style
    literals of clause c (positive = plain variable, negative = negation)."""

    num_vars: int
    literals: np.ndarray  # (num_clauses, 3) int32

    def __post_init__(self) -> None:
        lits = np.ascontiguousarray(np.asarray(self.literals, dtype=np.int32))
        if lits.ndim != 2 or lits.shape[1] != 3:
            raise ValueError("clause width must be exactly 3")
        if self.num_vars < 1:
            raise ValueError("num_vars must be positive")
        variables = np.abs(lits)
        if variables.min(initial=1) < 1 or variables.max(initial=1) > self.num_vars:
            raise ValueError("variable index out of range")
        if np.any(lits == 0):
            raise ValueError("literals must be non-zero")
        sorted_vars = np.sort(variables, axis=1)
        if lits.shape[0] and np.any(np.diff(sorted_vars, axis=1) == 0):
            raise ValueError("clause variables must be distinct")
        lits.setflags(write=False)
        object.__setattr__(self, "literals", lits)
        # cached index/polarity form used by the vectorized evaluator
        object.__setattr__(self, "_var_idx", variables.astype(np.int64) - 1)
        object.__setattr__(self, "_want", (lits > 0).astype(np.uint8))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sat3Instance):
            return NotImplemented
        return self.num_vars == other.num_vars and np.array_equal(
            self.literals, other.literals
        )

    @property
    def num_clauses(self) -> int:
        return self.literals.shape[0]

    @property
    def span(self) -> int:
        return self.num_vars

    def evaluate(self, genome: np.ndarray) -> int:
        """Number of clauses satisfied by one assignment."""
        genome = np.asarray(genome, dtype=np.uint8)
        if genome.shape != (self.num_vars,):
            raise ValueError("genome length does not match variable count")
        return int(self.evaluate_batch(genome[None, :])[0])

    def evaluate_batch(
        self, genomes: np.ndarray, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        """Satisfied-clause counts for a population; deterministic (the rng
        argument exists only to satisfy the engine's fitness interface)."""
        genomes = np.atleast_2d(np.asarray(genomes, dtype=np.uint8))
        if genomes.shape[1] != self.num_vars:
            raise ValueError("genome length does not match variable count")
        lit_true = genomes[:, self._var_idx] == self._want  # (N, m, 3)
        return lit_true.any(axis=2).sum(axis=1)


def generate_instance(
    num_vars: int, num_clauses: int, rng: np.random.Generator
) -> Sat3Instance:
    """Uniform random 3-CNF: each clause samples three distinct variables
    without replacement and negates each independently with probability 0.5.
    Duplicate clauses may occur."""
    if num_vars < 3:
        raise ValueError("num_vars must be at least 3")
    if num_clauses < 1:
        raise ValueError("num_clauses must be positive")
    # Sequential shifted draws give uniform ordered triples of distinct
    # variables without per-clause rejection loops.
    a = rng.integers(0, num_vars, size=num_clauses)
    b = rng.integers(0, num_vars - 1, size=num_clauses)
    b += b >= a
    c = rng.integers(0, num_vars - 2, size=num_clauses)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    c += c >= lo
    c += c >= hi
    variables = np.stack([a, b, c], axis=1).astype(np.int32) + 1
    negate = rng.random((num_clauses, 3)) < 0.5
    literals = np.where(negate, -variables, variables)
    return Sat3Instance(num_vars=num_vars, literals=literals)


def write_dimacs(instance: Sat3Instance, path: Union[str, Path]) -> None:
    """Write standard DIMACS CNF: ``p cnf V C`` then zero-terminated clauses."""
    lines = [f"p cnf {instance.num_vars} {instance.num_clauses}"]
    for clause in instance.literals:
        lines.append(f"{clause[0]} {clause[1]} {clause[2]} 0")
    Path(path).write_text("\n".join(lines) + "\n")


def read_dimacs(path: Union[str, Path]) -> Sat3Instance:
    """Parse a DIMACS CNF file whose clauses all have width 3.

    Comment lines (``c ...``) and blank lines are ignored; clauses may span
    lines. Raises ValueError for a malformed header, a clause of width other
    than 3, or a variable index outside the declared range.
    """
    header: tuple[int, int] | None = None
    tokens: list[int] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise ValueError("duplicate DIMACS header")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"malformed DIMACS header: {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise ValueError("clause data before DIMACS header")
        tokens.extend(int(tok) for tok in line.split())

    if header is None:
        raise ValueError("missing DIMACS header")
    num_vars, num_clauses = header

    clauses: list[list[int]] = []
    current: list[int] = []
    for tok in tokens:
        if tok == 0:
            if len(current) != 3:
                raise ValueError(
                    f"clause width must be 3, got {len(current)} in clause "
                    f"{len(clauses) + 1}"
                )
            clauses.append(current)
            current = []
        else:
            current.append(tok)
    if current:
        raise ValueError("unterminated final clause (missing trailing 0)")
    if len(clauses) != num_clauses:
        raise ValueError(
            f"header declares {num_clauses} clauses, file has {len(clauses)}"
        )
    literals = np.array(clauses, dtype=np.int32).reshape(len(clauses), 3)
    return Sat3Instance(num_vars=num_vars, literals=literals)
