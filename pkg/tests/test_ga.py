import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperclimb.ga import (
    ClampingConfig,
    ClampState,
    GaConfig,
    clamp_update,
    init_population,
    mutate,
    sigma_scale,
    step_generation,
    sus_select,
    uniform_crossover,
)
from hyperclimb.rng import trial_streams
from hyperclimb.staircase import make_basic


def rng(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# init_population
# ---------------------------------------------------------------------------


def test_init_deterministic_under_seed():
    config = GaConfig(population_size=4, generations=1, seed=9)
    a = init_population(config, 8, trial_streams(9).init)
    b = init_population(config, 8, trial_streams(9).init)
    assert a.genomes.shape == (4, 8)
    assert a.generation == 0
    assert np.array_equal(a.genomes, b.genomes)


def test_init_one_frequencies_concentrate():
    config = GaConfig(population_size=500, generations=1)
    pop = init_population(config, 200, rng(1))
    assert abs(pop.genomes.mean() - 0.5) < 0.1


def test_init_rejects_bad_sizes():
    with pytest.raises(ValueError):
        GaConfig(population_size=0, generations=1)
    with pytest.raises(ValueError):
        init_population(GaConfig(population_size=4, generations=1), 0, rng())


# ---------------------------------------------------------------------------
# sigma scaling
# ---------------------------------------------------------------------------


def test_sigma_scale_zero_variance_gives_ones():
    assert np.array_equal(sigma_scale([5.0, 5.0, 5.0]), [1.0, 1.0, 1.0])


def test_sigma_scale_mean_value_maps_to_one():
    out = sigma_scale([1.0, 2.0, 3.0])
    assert out[1] == pytest.approx(1.0)


def test_sigma_scale_clamps_below_zero():
    # mean 10, population sd exactly 2: raw 4 is -3 sd (clamped), raw 14 is +2 sd
    raw = [4.0, 14.0, 12.0] + [10.0] * 11
    out = sigma_scale(raw)
    assert np.mean(raw) == pytest.approx(10.0)
    assert np.std(raw) == pytest.approx(2.0)
    assert out[0] == 0.0
    assert out[1] == pytest.approx(3.0)


def test_sigma_scale_matches_formula():
    raw = rng(3).normal(size=40)
    expected = np.maximum(0.0, 1.0 + (raw - raw.mean()) / raw.std())
    assert np.allclose(sigma_scale(raw), expected)


def test_sigma_scale_rejects_empty():
    with pytest.raises(ValueError):
        sigma_scale([])


# ---------------------------------------------------------------------------
# stochastic universal sampling
# ---------------------------------------------------------------------------


def test_sus_equal_weights_selects_each_once():
    idx, fallback = sus_select(np.ones(4), 4, rng(5))
    assert not fallback
    assert sorted(idx.tolist()) == [0, 1, 2, 3]


def test_sus_expected_count_matches_proportion():
    # expectation of index-0 selections is count * f0 / total = 2 * 3/4 = 1.5
    counts = []
    for seed in range(10_000):
        idx, _ = sus_select(np.array([3.0, 1.0]), 2, rng(seed))
        counts.append(int((idx == 0).sum()))
        assert counts[-1] in (1, 2)
    assert np.mean(counts) == pytest.approx(1.5, abs=0.05)


def test_sus_all_zero_falls_back_to_uniform():
    idx, fallback = sus_select(np.zeros(3), 3, rng(2))
    assert fallback
    assert idx.shape == (3,)
    assert ((idx >= 0) & (idx < 3)).all()


def test_sus_rejects_negative_weights():
    with pytest.raises(ValueError):
        sus_select(np.array([1.0, -0.5]), 2, rng())


@settings(max_examples=200, deadline=None)
@given(
    weights=st.lists(st.floats(0.0, 100.0), min_size=1, max_size=20),
    count=st.integers(1, 40),
    seed=st.integers(0, 2**32 - 1),
)
def test_sus_counts_within_one_of_expectation(weights, count, seed):
    weights = np.asarray(weights)
    idx, fallback = sus_select(weights, count, rng(seed))
    assert idx.shape == (count,)
    if fallback:
        return
    expected = count * weights / weights.sum()
    observed = np.bincount(idx, minlength=weights.size)
    assert (np.abs(observed - expected) < 1.0 + 1e-9).all()


# ---------------------------------------------------------------------------
# uniform crossover
# ---------------------------------------------------------------------------


def test_crossover_identical_parents():
    a = np.array([1, 0, 1, 1], dtype=np.uint8)
    c1, c2 = uniform_crossover(a, a, rng())
    assert np.array_equal(c1, a) and np.array_equal(c2, a)


def test_crossover_complementary_reassortment():
    a = np.zeros(16, dtype=np.uint8)
    b = np.ones(16, dtype=np.uint8)
    c1, c2 = uniform_crossover(a, b, rng(4))
    assert np.array_equal(c1 ^ c2, np.ones(16, dtype=np.uint8))


def test_crossover_inheritance_rate_half():
    a = np.zeros(8, dtype=np.uint8)
    b = np.ones(8, dtype=np.uint8)
    r = rng(6)
    from_a = np.zeros(8)
    trials = 10_000
    for _ in range(trials):
        c1, _ = uniform_crossover(a, b, r)
        from_a += c1 == 0
    assert np.abs(from_a / trials - 0.5).max() < 0.02


def test_crossover_rejects_length_mismatch():
    with pytest.raises(ValueError):
        uniform_crossover(np.zeros(3, dtype=np.uint8), np.zeros(4, dtype=np.uint8), rng())


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), length=st.integers(1, 64))
def test_crossover_children_partition_parent_bits(seed, length):
    r = rng(seed)
    a = r.integers(0, 2, length, dtype=np.uint8)
    b = r.integers(0, 2, length, dtype=np.uint8)
    c1, c2 = uniform_crossover(a, b, r)
    # at every locus the children hold {a_i, b_i} in some order
    assert np.array_equal(
        np.sort(np.stack([c1, c2]), axis=0), np.sort(np.stack([a, b]), axis=0)
    )


# ---------------------------------------------------------------------------
# mutation
# ---------------------------------------------------------------------------


def test_mutate_rate_zero_is_identity():
    g = rng(1).integers(0, 2, 32, dtype=np.uint8)
    assert np.array_equal(mutate(g, 0.0, rng(2)), g)


def test_mutate_full_mask_overrides_rate_one():
    g = rng(1).integers(0, 2, 32, dtype=np.uint8)
    assert np.array_equal(mutate(g, 1.0, rng(2), mask=np.ones(32, dtype=bool)), g)


def test_mutate_mean_flip_count():
    g = np.zeros(10_000, dtype=np.uint8)
    r = rng(8)
    flips = [mutate(g, 0.003, r).sum() for _ in range(1_000)]
    assert np.mean(flips) == pytest.approx(30.0, abs=2.0)


def test_mutate_rejects_bad_rate_and_mask():
    g = np.zeros(4, dtype=np.uint8)
    with pytest.raises(ValueError):
        mutate(g, 1.5, rng())
    with pytest.raises(ValueError):
        mutate(g, 0.5, rng(), mask=np.zeros(3, dtype=bool))


# ---------------------------------------------------------------------------
# clamping state machine
# ---------------------------------------------------------------------------

CLAMP = ClampingConfig(flag_freq=0.01, unflag_freq=0.1, flag_period=200)


def test_clamp_flags_extreme_frequency():
    state = clamp_update(ClampState.fresh(1), np.array([0.005]), CLAMP)
    assert state.flagged[0]
    assert state.run_lengths[0] == 1
    assert not state.masked[0]


def test_clamp_masks_after_flag_period():
    state = ClampState(
        flagged=np.array([True]),
        run_lengths=np.array([199]),
        masked=np.array([False]),
    )
    state = clamp_update(state, np.array([0.95]), CLAMP)  # 0.95 > 1 - 0.1
    assert state.run_lengths[0] == 200
    assert state.masked[0]


def test_clamp_unflags_when_frequency_recovers():
    state = ClampState(
        flagged=np.array([True]),
        run_lengths=np.array([150]),
        masked=np.array([False]),
    )
    state = clamp_update(state, np.array([0.5]), CLAMP)
    assert not state.flagged[0]
    assert state.run_lengths[0] == 0
    assert not state.masked[0]


def test_clamp_masked_locus_keeps_counting():
    state = ClampState(
        flagged=np.array([True]),
        run_lengths=np.array([200]),
        masked=np.array([True]),
    )
    state = clamp_update(state, np.array([0.999]), CLAMP)
    assert state.masked[0]
    assert state.run_lengths[0] == 201


def test_clamping_config_validates_ordering():
    with pytest.raises(ValueError):
        ClampingConfig(flag_freq=0.2, unflag_freq=0.1, flag_period=10)
    with pytest.raises(ValueError):
        ClampingConfig(flag_freq=0.6, unflag_freq=0.7, flag_period=10)


@settings(max_examples=200, deadline=None)
@given(
    freqs=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30),
    flagged=st.booleans(),
    run=st.integers(0, 300),
)
def test_clamp_invariants(freqs, flagged, run):
    span = len(freqs)
    state = ClampState(
        flagged=np.full(span, flagged),
        run_lengths=np.full(span, run if flagged else 0, dtype=np.int64),
        masked=np.full(span, flagged and run >= CLAMP.flag_period),
    )
    out = clamp_update(state, np.array(freqs), CLAMP)
    # masked implies flagged with a long enough run; unflagged means run reset
    assert not np.any(out.masked & ~out.flagged)
    assert np.all(out.run_lengths[out.masked] >= CLAMP.flag_period)
    assert np.all(out.run_lengths[~out.flagged] == 0)
    assert np.all(out.run_lengths[out.flagged] >= 1)


# ---------------------------------------------------------------------------
# one full generation
# ---------------------------------------------------------------------------


def _streams(seed=0):
    return trial_streams(seed, 0)


def test_step_without_variation_keeps_identical_population():
    fitness = make_basic(2, 2, 1.0, 0.0)
    config = GaConfig(
        population_size=2, mutation_rate=0.0, crossover="none", generations=1
    )
    genomes = np.tile(np.array([1, 0, 1, 1], dtype=np.uint8), (2, 1))
    from hyperclimb.ga import Population

    pop = Population(genomes=genomes.copy(), generation=0)
    new_pop, _, _ = step_generation(pop, fitness, config, None, _streams())
    assert np.array_equal(new_pop.genomes, genomes)
    assert new_pop.generation == 1


def test_step_all_ones_scores_full_height():
    fitness = make_basic(2, 2, 1.0, 0.0)
    config = GaConfig(
        population_size=6, mutation_rate=0.0, crossover="none", generations=1
    )
    from hyperclimb.ga import Population

    pop = Population(np.ones((6, 4), dtype=np.uint8))
    streams = _streams()
    for _ in range(5):
        pop, _, record = step_generation(pop, fitness, config, None, streams)
        assert record.avg_fitness == pytest.approx(2.0)


def test_step_is_deterministic_under_seed():
    fitness = make_basic(3, 2, 0.5, 1.0)
    config = GaConfig(population_size=20, generations=1, seed=5)

    def one_run():
        streams = trial_streams(5, 0)
        pop = init_population(config, fitness.span, streams.init)
        rows = []
        state = None
        for _ in range(10):
            pop, state, rec = step_generation(pop, fitness, config, state, streams)
            rows.append((rec.avg_fitness, rec.best_fitness))
        return pop.genomes, rows

    genomes_a, rows_a = one_run()
    genomes_b, rows_b = one_run()
    assert np.array_equal(genomes_a, genomes_b)
    assert rows_a == rows_b


def test_step_rejects_span_mismatch():
    fitness = make_basic(2, 2, 1.0, 0.0)
    config = GaConfig(population_size=4, generations=1)
    pop = init_population(config, 5, _streams().init)
    with pytest.raises(ValueError):
        step_generation(pop, fitness, config, None, _streams())


def test_no_novel_genomes_without_variation():
    fitness = make_basic(2, 2, 1.0, 1.0)
    config = GaConfig(
        population_size=16, mutation_rate=0.0, crossover="none", generations=1, seed=3
    )
    streams = trial_streams(3, 0)
    pop = init_population(config, fitness.span, streams.init)
    original = {bytes(g) for g in pop.genomes}
    state = None
    for _ in range(20):
        pop, state, _ = step_generation(pop, fitness, config, state, streams)
        assert {bytes(g) for g in pop.genomes} <= original


def test_masked_fixed_locus_stays_fixed():
    # once a locus is masked and strictly fixed, selection and crossover
    # cannot reintroduce the absent allele and mutation is off
    fitness = make_basic(2, 2, 1.0, 1.0)
    config = GaConfig(
        population_size=12,
        mutation_rate=0.05,
        crossover="uniform",
        generations=1,
        seed=2,
        clamping=ClampingConfig(0.01, 0.1, flag_period=1),
    )
    streams = trial_streams(2, 0)
    pop = init_population(config, fitness.span, streams.init)
    pop.genomes[:, 0] = 1  # strictly fixed from the start
    state = None
    for _ in range(30):
        pop, state, _ = step_generation(pop, fitness, config, state, streams)
        assert state.masked[0]
        assert (pop.genomes[:, 0] == 1).all()
