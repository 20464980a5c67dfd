"""Strategies: grid enumeration, random sampling, genetic operators and loop."""

import random

import pytest

from cellsearch.errors import ConfigError, ContractError
from cellsearch.evaluators import SurrogateEvaluator
from cellsearch.space import GenomeLayout, IntDomain, SearchSpace
from cellsearch.strategies import (
    GAConfig,
    GridConfig,
    Individual,
    RandomConfig,
    _tournament,
    crossover_at,
    decode_population,
    ga_crossover,
    ga_init,
    ga_mutate,
    ga_run,
    ga_select,
    grid_enumerate,
    random_sample,
)


def full_range_space() -> SearchSpace:
    return SearchSpace(
        conv_domain=IntDomain.bounded("conv", 0, 15),
        dense_domain=IntDomain.bounded("dense", 0, 15),
        genome_layout=GenomeLayout(),
    )


class TestGrid:
    def test_row_major_enumeration(self):
        config = GridConfig(
            conv=IntDomain.enumerated("conv", [0, 2, 3, 4]),
            dense=IntDomain.enumerated("dense", [1, 2]),
        )
        pairs = [(c.conv_cells, c.dense_cells) for c in grid_enumerate(config)]
        assert pairs == [
            (0, 1), (0, 2), (2, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2)
        ]

    def test_requires_enumerated_domains(self):
        with pytest.raises(ConfigError):
            GridConfig(
                conv=IntDomain.bounded("conv", 0, 4),
                dense=IntDomain.enumerated("dense", [1]),
            )


def random_config(**kwargs) -> RandomConfig:
    defaults = dict(
        conv=IntDomain.bounded("conv", 2, 8),
        dense=IntDomain.bounded("dense", 1, 4),
        n_iterations=5,
    )
    defaults.update(kwargs)
    return RandomConfig(**defaults)


class TestRandom:
    def test_draws_stay_in_bounds(self):
        for c in random_sample(random_config(n_iterations=1000, seed=3)):
            assert 2 <= c.conv_cells <= 8
            assert 1 <= c.dense_cells <= 4

    def test_same_seed_same_sequence(self):
        assert random_sample(random_config(seed=7)) == random_sample(random_config(seed=7))

    def test_different_seeds_differ(self):
        a = random_sample(random_config(n_iterations=20, seed=1))
        b = random_sample(random_config(n_iterations=20, seed=2))
        assert a != b

    def test_zero_iterations(self):
        assert random_sample(random_config(n_iterations=0)) == []

    def test_dedup_yields_distinct(self):
        config = random_config(
            conv=IntDomain.bounded("conv", 0, 1),
            dense=IntDomain.bounded("dense", 0, 1),
            n_iterations=4,
            dedup=True,
            seed=0,
        )
        draws = random_sample(config)
        assert len({(c.conv_cells, c.dense_cells) for c in draws}) == 4

    def test_dedup_gives_up_on_exhausted_space(self):
        config = random_config(
            conv=IntDomain.bounded("conv", 0, 0),
            dense=IntDomain.bounded("dense", 0, 0),
            n_iterations=3,
            dedup=True,
        )
        draws = random_sample(config)
        assert len(draws) == 3
        assert all((c.conv_cells, c.dense_cells) == (0, 0) for c in draws)

    def test_validation(self):
        with pytest.raises(ConfigError):
            random_config(n_iterations=-1)
        with pytest.raises(ConfigError):
            random_config(conv=IntDomain.enumerated("conv", [1, 2]))


class TestGAConfig:
    def test_default_mutation_rate_is_one_over_length(self):
        assert GAConfig().effective_mutation_rate == pytest.approx(1 / 8)
        assert GAConfig(genome_length=6).effective_mutation_rate == pytest.approx(1 / 6)
        assert GAConfig(mutation_rate=0.3).effective_mutation_rate == 0.3

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"population_size": 1},
            {"generations": -1},
            {"genome_length": 1},
            {"init_bit_probability": 1.5},
            {"crossover_probability": -0.1},
            {"mutation_rate": 2.0},
            {"tournament_size": 0},
            {"elitism": 2},  # equals default population_size
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ConfigError):
            GAConfig(**kwargs)


class _ScriptedRng:
    """Duck-typed rng whose randrange answers come from a fixed script."""

    def __init__(self, draws):
        self._draws = iter(draws)

    def randrange(self, n):
        return next(self._draws)


class TestTournament:
    def test_better_fitness_wins(self):
        pop = [Individual((0,), fitness=1.0), Individual((1,), fitness=2.0)]
        assert _tournament(pop, _ScriptedRng([0, 1]), 2) == 1

    def test_tie_breaks_to_lower_index(self):
        pop = [Individual((0,), fitness=1.0), Individual((1,), fitness=1.0)]
        assert _tournament(pop, _ScriptedRng([1, 0]), 2) == 0
        assert _tournament(pop, _ScriptedRng([1, 1]), 2) == 1

    def test_win_rate_matches_enumeration(self):
        # fitnesses (2, 1): of the four equally likely draw pairs, index 0
        # wins (0,0), (0,1) and (1,0), so exactly 3/4
        pop = [Individual((0,), fitness=2.0), Individual((1,), fitness=1.0)]
        rng = random.Random(0)
        n = 20_000
        wins = sum(1 for _ in range(n) if _tournament(pop, rng, 2) == 0)
        assert wins / n == pytest.approx(0.75, abs=0.01)

    def test_unset_fitness_rejected(self):
        pop = [Individual((0,)), Individual((1,), fitness=1.0)]
        with pytest.raises(ContractError):
            _tournament(pop, _ScriptedRng([0, 1]), 2)

    def test_select_returns_pair_with_replacement(self):
        pop = [Individual((0,), fitness=5.0), Individual((1,), fitness=0.0)]
        a, b = ga_select(pop, _ScriptedRng([0, 0, 0, 0]), tournament_size=2)
        assert a is pop[0] and b is pop[0]


class TestCrossover:
    def test_cut_semantics(self):
        a = (1, 1, 1, 1, 0, 0, 0, 0)
        b = (0, 0, 0, 0, 1, 1, 1, 1)
        ca, cb = crossover_at(a, b, 4)
        assert ca == (1, 1, 1, 1, 1, 1, 1, 1)
        assert cb == (0, 0, 0, 0, 0, 0, 0, 0)

    def test_cut_bounds(self):
        a, b = (0,) * 8, (1,) * 8
        with pytest.raises(ConfigError):
            crossover_at(a, b, 0)
        with pytest.raises(ConfigError):
            crossover_at(a, b, 8)

    def test_length_mismatch(self):
        with pytest.raises(ConfigError):
            crossover_at((0, 1), (0, 1, 1), 1)

    def test_probability_zero_copies_parents(self):
        a, b = (0,) * 8, (1,) * 8
        assert ga_crossover(a, b, random.Random(0), crossover_probability=0.0) == (a, b)

    def test_probability_one_always_cuts(self):
        a, b = (0,) * 8, (1,) * 8
        rng = random.Random(1)
        for _ in range(50):
            ca, cb = ga_crossover(a, b, rng, crossover_probability=1.0)
            assert ca != a and cb != b  # every interior cut mixes the parents


class TestMutation:
    def test_rate_zero_is_identity(self):
        g = (0, 1, 0, 1, 1, 0, 0, 1)
        assert ga_mutate(g, random.Random(0), 0.0) == g

    def test_rate_one_flips_everything(self):
        g = (0, 1, 0, 1, 1, 0, 0, 1)
        assert ga_mutate(g, random.Random(0), 1.0) == tuple(b ^ 1 for b in g)


class TestInit:
    def test_shapes(self):
        pop = ga_init(GAConfig(population_size=4, genome_length=8))
        assert len(pop) == 4
        assert all(len(g) == 8 for g in pop)

    def test_bit_probability_extremes(self):
        assert ga_init(GAConfig(init_bit_probability=0.0)) == [(0,) * 8, (0,) * 8]
        assert ga_init(GAConfig(init_bit_probability=1.0)) == [(1,) * 8, (1,) * 8]

    def test_seeded_determinism(self):
        assert ga_init(GAConfig(seed=5)) == ga_init(GAConfig(seed=5))


class TestGARun:
    def evaluate_with(self, space, evaluator, seed):
        def evaluate(genomes):
            cands = decode_population(genomes, space)
            return [evaluator.evaluate(c, seed).fitness for c in cands]

        return evaluate

    def test_requests_full_population_every_generation(self):
        space = full_range_space()
        ev = SurrogateEvaluator()
        batches = []

        def evaluate(genomes):
            batches.append(len(genomes))
            cands = decode_population(genomes, space)
            return [ev.evaluate(c, 0).fitness for c in cands]

        result = ga_run(GAConfig(population_size=2, generations=8), space, evaluate)
        assert batches == [2] * 9
        assert result.evaluations_requested == 18

    def test_generation_best_non_decreasing_with_elitism(self):
        space = full_range_space()
        ev = SurrogateEvaluator()
        for seed in range(100):
            result = ga_run(
                GAConfig(population_size=4, generations=6, seed=seed),
                space,
                self.evaluate_with(space, ev, seed),
            )
            for earlier, later in zip(result.generation_best, result.generation_best[1:]):
                assert later >= earlier, f"seed {seed}"

    def test_best_ever_is_max_seen(self):
        space = full_range_space()
        ev = SurrogateEvaluator(noise_sd=0.05)
        seen = []

        def evaluate(genomes):
            fits = self.evaluate_with(space, ev, 3)(genomes)
            seen.extend(fits)
            return fits

        result = ga_run(GAConfig(population_size=4, generations=6, seed=3), space, evaluate)
        assert result.best_fitness == max(seen)

    def test_same_seed_reproduces(self):
        space = full_range_space()
        ev = SurrogateEvaluator()
        runs = [
            ga_run(
                GAConfig(population_size=4, generations=5, seed=11),
                space,
                self.evaluate_with(space, ev, 11),
            )
            for _ in range(2)
        ]
        assert runs[0].best_genome == runs[1].best_genome
        assert runs[0].generation_best == runs[1].generation_best

    def test_genome_length_must_match_space(self):
        with pytest.raises(ConfigError):
            ga_run(GAConfig(genome_length=6), full_range_space(), lambda g: [0.0] * len(g))

    def test_zero_generations_single_evaluation(self):
        space = full_range_space()
        ev = SurrogateEvaluator()
        result = ga_run(
            GAConfig(population_size=2, generations=0, seed=0),
            space,
            self.evaluate_with(space, ev, 0),
        )
        assert result.evaluations_requested == 2
        assert len(result.generation_best) == 1
