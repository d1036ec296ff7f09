"""Genetic-algorithm experiments on staircase fitness families and MAX 3-SAT.

The package bundles a seeded generational GA engine (sigma scaling,
stochastic universal sampling, uniform crossover, bit-flip mutation, and a
frequency-based mutation-clamping mechanism), the staircase and
multi-staircase stochastic fitness functions with their schema-signal
analytics and brute-force oracles, random MAX 3-SAT instances with DIMACS
I/O, fractal genome-space plots, and a CLI that orchestrates multi-trial
experiments into CSV traces.
"""

from .ga import (
    ClampingConfig,
    ClampState,
    GaConfig,
    GenerationRecord,
    Population,
    clamp_update,
    init_population,
    mutate,
    sigma_scale,
    step_generation,
    sus_select,
    uniform_crossover,
)
from .staircase import (
    BasicFrameTransform,
    MultiStaircaseDescriptor,
    StaircaseDescriptor,
    basic_form,
    make_basic,
    make_basic_multi,
    read_descriptor_file,
    transform_to_basic_frame,
    write_descriptor_file,
)
from .schema import (
    Schema,
    SchemaPartition,
    conditional_signal_bruteforce,
    one_frequencies,
    project,
    signal_analytic,
    signal_bruteforce,
    signal_check_suite,
    snr_analytic,
    stage_schema,
    stage_step_frequencies,
    step_schema,
)
from .maxsat import Sat3Instance, generate_instance, read_dimacs, write_dimacs
from .fractal import (
    FractalAddressingSystem,
    address,
    emit_one_frequency_frames,
    fitness_grid,
    render_fractal_plot,
    system_for_staircase,
)
from .experiment import (
    ExperimentConfig,
    MaxSatSpec,
    MultiStaircaseSpec,
    RecordOptions,
    RunTrace,
    StaircaseSpec,
    aggregate_traces,
    read_trace_csv,
    run_experiment,
    run_symmetry_check,
    run_trial,
    write_trace_csv,
)
from .rng import stream, trial_streams

__version__ = "0.1.0"
