"""The three search strategies: exhaustive grid, bounded random, genetic.

All strategies are deterministic functions of their config (including its
seed) and of the evaluator's responses.  Candidate generation is strictly
sequential; only the evaluation of one batch / generation may be dispatched
concurrently by the caller.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .errors import ConfigError, ContractError
from .space import (
    CandidateArchitecture,
    Genome,
    IntDomain,
    SearchSpace,
    decode_genome,
)

# After this many consecutive rejected redraws, dedup gives up and sampling
# proceeds with duplicates allowed (protects against near-exhausted spaces).
DEDUP_RETRY_CAP = 1000


@dataclass(frozen=True)
class GridConfig:
    """Complete enumeration of two explicit value lists, conv outer, dense inner."""

    conv: IntDomain
    dense: IntDomain

    def __post_init__(self):
        for domain in (self.conv, self.dense):
            if domain.kind != "enumerated":
                raise ConfigError(f"grid search needs enumerated domains, got {domain.kind!r}")


@dataclass(frozen=True)
class RandomConfig:
    """Uniform independent draws from two inclusive integer ranges."""

    conv: IntDomain
    dense: IntDomain
    n_iterations: int
    seed: int = 0
    dedup: bool = False

    def __post_init__(self):
        for domain in (self.conv, self.dense):
            if domain.kind != "range":
                raise ConfigError(f"random search needs range domains, got {domain.kind!r}")
        if self.n_iterations < 0:
            raise ConfigError(f"n_iterations must be >= 0, got {self.n_iterations}")


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 2
    generations: int = 8
    genome_length: int = 8
    init_bit_probability: float = 0.5
    tournament_size: int = 2
    crossover_probability: float = 0.9
    mutation_rate: float | None = None  # None -> 1 / genome_length
    elitism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError(f"population_size must be >= 2, got {self.population_size}")
        if self.generations < 0:
            raise ConfigError(f"generations must be >= 0, got {self.generations}")
        if self.genome_length < 2:
            raise ConfigError(f"genome_length must be >= 2, got {self.genome_length}")
        for name in ("init_bit_probability", "crossover_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError(f"mutation_rate must be in [0, 1], got {self.mutation_rate}")
        if self.tournament_size < 1:
            raise ConfigError(f"tournament_size must be >= 1, got {self.tournament_size}")
        if not 0 <= self.elitism < self.population_size:
            raise ConfigError(
                f"elitism must be in [0, population_size), got {self.elitism}"
            )

    @property
    def effective_mutation_rate(self) -> float:
        return self.mutation_rate if self.mutation_rate is not None else 1.0 / self.genome_length


@dataclass
class Individual:
    genome: Genome
    fitness: float | None = None


def grid_enumerate(config: GridConfig) -> list[CandidateArchitecture]:
    """All |conv| x |dense| combinations in row-major order (conv outer)."""
    return [
        CandidateArchitecture(conv_cells=c, dense_cells=d)
        for c in config.conv.values
        for d in config.dense.values
    ]


def random_sample(config: RandomConfig) -> list[CandidateArchitecture]:
    """n_iterations candidates drawn uniformly from the configured ranges.

    With dedup on, duplicates of already-emitted candidates are redrawn, up
    to DEDUP_RETRY_CAP consecutive rejections, after which duplicates are
    accepted again.
    """
    rng = random.Random(config.seed)
    out: list[CandidateArchitecture] = []
    seen: set[tuple[int, int]] = set()
    rejections = 0
    while len(out) < config.n_iterations:
        cand = CandidateArchitecture(
            conv_cells=rng.randint(config.conv.lo, config.conv.hi),
            dense_cells=rng.randint(config.dense.lo, config.dense.hi),
        )
        key = (cand.conv_cells, cand.dense_cells)
        if config.dedup and rejections < DEDUP_RETRY_CAP and key in seen:
            rejections += 1
            continue
        rejections = 0
        seen.add(key)
        out.append(cand)
    return out


def ga_init(config: GAConfig, rng: random.Random | None = None) -> list[Genome]:
    """Initial population: each bit independently 1 with init_bit_probability."""
    rng = rng if rng is not None else random.Random(config.seed)
    return [
        tuple(1 if rng.random() < config.init_bit_probability else 0
              for _ in range(config.genome_length))
        for _ in range(config.population_size)
    ]


def _tournament(individuals: list[Individual], rng: random.Random, size: int) -> int:
    """One tournament: draw `size` indices with replacement, best fitness wins,
    ties broken by the lower population index."""
    best: int | None = None
    for _ in range(size):
        i = rng.randrange(len(individuals))
        fit = individuals[i].fitness
        if fit is None:
            raise ContractError(f"individual {i} has no fitness set")
        if best is None or fit > individuals[best].fitness or (
            fit == individuals[best].fitness and i < best
        ):
            best = i
    return best


def ga_select(
    individuals: list[Individual], rng: random.Random, tournament_size: int = 2
) -> tuple[Individual, Individual]:
    """Two tournaments with replacement; the pair may repeat an individual."""
    a = _tournament(individuals, rng, tournament_size)
    b = _tournament(individuals, rng, tournament_size)
    return individuals[a], individuals[b]


def crossover_at(parent_a: Genome, parent_b: Genome, cut: int) -> tuple[Genome, Genome]:
    if len(parent_a) != len(parent_b):
        raise ConfigError(f"parent lengths differ: {len(parent_a)} vs {len(parent_b)}")
    if not 1 <= cut <= len(parent_a) - 1:
        raise ConfigError(f"cut must be in [1, {len(parent_a) - 1}], got {cut}")
    return parent_a[:cut] + parent_b[cut:], parent_b[:cut] + parent_a[cut:]


def ga_crossover(
    parent_a: Genome,
    parent_b: Genome,
    rng: random.Random,
    crossover_probability: float = 0.9,
) -> tuple[Genome, Genome]:
    """Single-point crossover at a uniform cut with the given probability,
    otherwise the children are copies of the parents."""
    if len(parent_a) != len(parent_b):
        raise ConfigError(f"parent lengths differ: {len(parent_a)} vs {len(parent_b)}")
    if rng.random() < crossover_probability:
        cut = rng.randint(1, len(parent_a) - 1)
        return crossover_at(parent_a, parent_b, cut)
    return parent_a, parent_b


def ga_mutate(genome: Genome, rng: random.Random, rate: float) -> Genome:
    return tuple(b ^ 1 if rng.random() < rate else b for b in genome)


@dataclass
class GAResult:
    best_genome: Genome
    best_fitness: float
    generation_best: list[float] = field(default_factory=list)
    evaluations_requested: int = 0


EvaluatePopulation = Callable[[list[Genome]], list[float]]


def ga_run(
    config: GAConfig, space: SearchSpace, evaluate_population: EvaluatePopulation
) -> GAResult:
    """Generational loop: evaluate, carry elites, refill by select/crossover/
    mutate, for `generations` generations.

    Every generation's full population is submitted for evaluation (callers
    may answer repeats from a cache), so at most population_size x
    (generations + 1) evaluations are requested.  The result carries the best
    individual ever seen, not merely the best of the final generation.
    """
    if config.genome_length != space.genome_layout.total_bits:
        raise ConfigError(
            f"genome_length {config.genome_length} != space layout "
            f"{space.genome_layout.total_bits}"
        )
    rng = random.Random(config.seed)
    population = [Individual(g) for g in ga_init(config, rng)]
    result = GAResult(best_genome=population[0].genome, best_fitness=float("-inf"))

    def evaluate(pop: list[Individual]) -> None:
        fitnesses = evaluate_population([ind.genome for ind in pop])
        result.evaluations_requested += len(pop)
        gen_best = float("-inf")
        for ind, fit in zip(pop, fitnesses):
            ind.fitness = fit
            gen_best = max(gen_best, fit)
            if fit > result.best_fitness:
                result.best_fitness = fit
                result.best_genome = ind.genome
        result.generation_best.append(gen_best)

    evaluate(population)
    for _ in range(config.generations):
        ranked = sorted(
            range(len(population)), key=lambda i: (-population[i].fitness, i)
        )
        next_pop = [Individual(population[i].genome) for i in ranked[: config.elitism]]
        while len(next_pop) < config.population_size:
            pa, pb = ga_select(population, rng, config.tournament_size)
            ca, cb = ga_crossover(pa.genome, pb.genome, rng, config.crossover_probability)
            ca = ga_mutate(ca, rng, config.effective_mutation_rate)
            cb = ga_mutate(cb, rng, config.effective_mutation_rate)
            next_pop.append(Individual(ca))
            if len(next_pop) < config.population_size:
                next_pop.append(Individual(cb))
        population = next_pop
        evaluate(population)
    return result


def decode_population(genomes: list[Genome], space: SearchSpace) -> list[CandidateArchitecture]:
    return [decode_genome(g, space.genome_layout) for g in genomes]
