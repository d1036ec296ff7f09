"""Fractal genome-space plots and one-frequency heatmap frames.

A fractal addressing system maps every genome of length 2*m*n to a pixel on
a 2**(m*n) by 2**(m*n) grid by reading m disjoint n-bit groups into nested
binary coordinates: row i of the X (Y) matrix contributes the i-th coarsest
n bits of the x (y) coordinate. The addressing is a bijection, so querying a
fitness function with every genome fills the grid exactly once; rendering it
as a greyscale image (lighter = fitter) makes nested hyperplane structure
visible when the coarse rows align with the function's stage loci.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .bits import all_bitstrings, bits_to_int
from .staircase import StaircaseDescriptor

# Exhaustive rendering is capped at m*n <= 10 (a 1024x1024 grid, 2**20 queries).
RENDER_CAP_MN = 10


@dataclass(frozen=True, eq=False)
class FractalAddressingSystem:
    """Coordinate matrices mapping genomes of length 2*m*n onto a square grid.

    ``x_loci`` and ``y_loci`` are (m, n) matrices of 1-based locus indices
    that together contain every index in [1, 2*m*n] exactly once.
    """

    x_loci: np.ndarray
    y_loci: np.ndarray

    def __post_init__(self) -> None:
        x = np.ascontiguousarray(np.asarray(self.x_loci, dtype=np.int64))
        y = np.ascontiguousarray(np.asarray(self.y_loci, dtype=np.int64))
        if x.ndim != 2 or x.shape != y.shape:
            raise ValueError("x_loci and y_loci must be matrices of equal shape")
        length = 2 * x.size
        combined = np.concatenate([x.reshape(-1), y.reshape(-1)])
        if np.unique(combined).size != combined.size:
            raise ValueError("coordinate loci must be distinct")
        if combined.min() < 1 or combined.max() > length:
            raise ValueError(f"coordinate loci must cover [1, {length}] exactly once")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x_loci", x)
        object.__setattr__(self, "y_loci", y)

    @property
    def levels(self) -> int:
        return self.x_loci.shape[0]

    @property
    def bits_per_level(self) -> int:
        return self.x_loci.shape[1]

    @property
    def genome_length(self) -> int:
        return 2 * self.x_loci.size

    @property
    def side(self) -> int:
        return 1 << (self.levels * self.bits_per_level)

    def swapped(self) -> "FractalAddressingSystem":
        """The system with X and Y exchanged; transposes every address."""
        return FractalAddressingSystem(x_loci=self.y_loci, y_loci=self.x_loci)


def address_batch(
    system: FractalAddressingSystem, genomes: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Pixel coordinates of each genome; 0-based in [0, side - 1].

    The first matrix row contributes the most significant n bits of its
    coordinate (granularity side / 2**n), the last row the least significant.
    Bit groups are read big-endian.
    """
    genomes = np.atleast_2d(np.asarray(genomes, dtype=np.uint8))
    if genomes.shape[1] != system.genome_length:
        raise ValueError("genome length does not match the addressing system")
    n = system.bits_per_level
    granularity = system.side >> n
    x = np.zeros(genomes.shape[0], dtype=np.int64)
    y = np.zeros(genomes.shape[0], dtype=np.int64)
    for i in range(system.levels):
        x += granularity * bits_to_int(genomes[:, system.x_loci[i] - 1])
        y += granularity * bits_to_int(genomes[:, system.y_loci[i] - 1])
        granularity >>= n
    return x, y


def address(system: FractalAddressingSystem, genome: np.ndarray) -> tuple[int, int]:
    """Pixel coordinate of a single genome."""
    xs, ys = address_batch(system, np.asarray(genome)[None, :])
    return int(xs[0]), int(ys[0])


def fitness_grid(
    fitness, system: FractalAddressingSystem, rng: np.random.Generator
) -> np.ndarray:
    """Query the fitness of every genome once and place it on the grid.

    Returns a (side, side) float array with grid[y, x] = fitness of the
    genome addressed at (x, y). Stochastic functions get one fresh noise
    draw per genome.
    """
    mn = system.levels * system.bits_per_level
    if mn > RENDER_CAP_MN:
        raise ValueError(
            f"grid of 2^{mn} per side exceeds the render cap (m*n <= {RENDER_CAP_MN})"
        )
    if fitness.span != system.genome_length:
        raise ValueError("fitness span does not match the addressing system")
    genomes = all_bitstrings(system.genome_length)
    values = fitness.evaluate_batch(genomes, rng)
    xs, ys = address_batch(system, genomes)
    grid = np.empty((system.side, system.side), dtype=np.float64)
    grid[ys, xs] = values
    return grid


def render_fractal_plot(
    fitness,
    system: FractalAddressingSystem,
    rng: np.random.Generator,
    out_path: Union[str, Path, None] = None,
) -> np.ndarray:
    """Render the exhaustive-query greyscale plot; lighter shades = fitter.

    Fitness values are scaled linearly onto [0, 255]. A degenerate range
    (all values equal) renders as uniform mid-grey. When ``out_path`` is
    given the image is written as a binary PGM.
    """
    grid = fitness_grid(fitness, system, rng)
    lo, hi = float(grid.min()), float(grid.max())
    if hi == lo:
        image = np.full(grid.shape, 128, dtype=np.uint8)
    else:
        image = np.rint((grid - lo) / (hi - lo) * 255.0).astype(np.uint8)
    if out_path is not None:
        write_pgm(image, out_path)
    return image


def system_for_staircase(
    descriptor: StaircaseDescriptor, placement: str = "leading"
) -> FractalAddressingSystem:
    """Build an addressing system aligned with a staircase's stage loci.

    Stage rows alternate between X and Y. With ``placement="leading"`` stage
    pair j occupies row j of X and Y (coarsest coordinates first), so the
    nested step structure shows up as nested quadrants. With
    ``placement="trailing"`` stage pair j occupies row m+1-j (the finest
    coordinates), scattering the structure across the grid. Loci not used by
    any stage fill the remaining row slots in ascending order, X rows first.
    """
    if placement not in ("leading", "trailing"):
        raise ValueError("placement must be 'leading' or 'trailing'")
    n = descriptor.order
    if descriptor.span % (2 * n) != 0:
        raise ValueError("span must be divisible by 2*order to build a grid system")
    m = descriptor.span // (2 * n)
    if (descriptor.height + 1) // 2 > m:
        raise ValueError("too many stages for the grid depth")

    x_rows: list[np.ndarray | None] = [None] * m
    y_rows: list[np.ndarray | None] = [None] * m
    for stage in range(1, descriptor.height + 1):
        pair = (stage + 1) // 2
        row = pair - 1 if placement == "leading" else m - pair
        target_rows = x_rows if stage % 2 == 1 else y_rows
        target_rows[row] = descriptor.loci[stage - 1]

    used = descriptor.loci.reshape(-1)
    leftover = iter(np.setdiff1d(np.arange(1, descriptor.span + 1), used))
    for rows in (x_rows, y_rows):
        for i in range(m):
            if rows[i] is None:
                rows[i] = np.array([next(leftover) for _ in range(n)], dtype=np.int64)
    return FractalAddressingSystem(
        x_loci=np.stack(x_rows), y_loci=np.stack(y_rows)
    )


def step_region_bounds(
    descriptor: StaircaseDescriptor,
) -> list[tuple[int, int, int, int]]:
    """Nested pixel rectangles of each step under the leading-aligned system.

    Entry i-1 is ``(x_lo, x_hi, y_lo, y_hi)`` (half-open) covering exactly
    the genomes matching stages 1..i when plotted under
    ``system_for_staircase(descriptor, "leading")``.
    """
    n = descriptor.order
    if descriptor.span % (2 * n) != 0:
        raise ValueError("span must be divisible by 2*order to build a grid system")
    m = descriptor.span // (2 * n)
    if (descriptor.height + 1) // 2 > m:
        raise ValueError("too many stages for the grid depth")
    side = 1 << (m * n)
    x_lo, y_lo = 0, 0
    x_width, y_width = side, side
    bounds = []
    for stage in range(1, descriptor.height + 1):
        value = int(bits_to_int(descriptor.targets[stage - 1]))
        pair = (stage + 1) // 2
        granularity = side >> (n * pair)
        if stage % 2 == 1:
            x_lo += value * granularity
            x_width = granularity
        else:
            y_lo += value * granularity
            y_width = granularity
        bounds.append((x_lo, x_lo + x_width, y_lo, y_lo + y_width))
    return bounds


def emit_one_frequency_frames(
    trace,
    out_dir: Union[str, Path],
    bar_height: int = 1,
) -> list[Path]:
    """Write one greyscale frame per generation of a trace's one-frequencies.

    Each frame is a (bar_height, span) PGM with intensity = frequency * 255,
    named ``frame_000000.pgm`` onward so lexicographic order is generation
    order (ready for assembly into an animation).
    """
    freqs = getattr(trace, "one_frequencies", trace)
    if freqs is None:
        raise ValueError("trace has no one-frequency data")
    freqs = np.atleast_2d(np.asarray(freqs, dtype=np.float64))
    if bar_height < 1:
        raise ValueError("bar_height must be positive")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for g in range(freqs.shape[0]):
        row = np.rint(freqs[g] * 255.0).astype(np.uint8)
        image = np.repeat(row[None, :], bar_height, axis=0)
        path = out / f"frame_{g:06d}.pgm"
        write_pgm(image, path)
        paths.append(path)
    return paths


def write_pgm(image: np.ndarray, path: Union[str, Path]) -> None:
    """Write a 2-D uint8 array as a binary (P5, maxval 255) portable greymap."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 2:
        raise ValueError("image must be two-dimensional")
    height, width = image.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.tobytes())


def read_pgm(path: Union[str, Path]) -> np.ndarray:
    """Read a binary P5 greymap written by write_pgm."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5":
        raise ValueError("not a binary P5 greymap")
    width, height = (int(tok) for tok in parts[1].split())
    if parts[2] != b"255":
        raise ValueError("only maxval 255 greymaps are supported")
    pixels = np.frombuffer(parts[3][: width * height], dtype=np.uint8)
    if pixels.size != width * height:
        raise ValueError("truncated greymap payload")
    return pixels.reshape(height, width).copy()
