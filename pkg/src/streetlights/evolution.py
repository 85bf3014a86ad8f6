"""Genome codec, fitness scoring and the elitist genetic algorithm.

A genome is the flat 14-gene weight vector of one controller. Candidates
are scored by averaging a few seeded trials; the percentage equations
turn trial counters into a scalar fitness. Trial seeds derive from the
genome's content hash, so re-evaluating an elite reproduces its fitness
bit-for-bit and the best-of-generation series never decreases.
"""
from __future__ import annotations

import hashlib
import multiprocessing
import struct
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .controller import ControllerWeights, DiscretizationPolicy
from .scenario import Scenario
from .world import TrialStats, run_trial

GENOME_LENGTH = 14

_GA_STREAM = 7  # tag for the GA's own RNG, distinct from trial sub-streams

Genome = tuple[float, ...]


class EvolutionError(ValueError):
    """Invalid GA configuration, genome, or fitness precondition."""


def genome_to_weights(genes: Sequence[float]) -> ControllerWeights:
    """Decode the flat gene vector; inverse of ``weights_to_genome``."""
    return ControllerWeights.from_flat(genes)


def weights_to_genome(weights: ControllerWeights) -> Genome:
    return weights.as_flat()


@dataclass(frozen=True)
class GaConfig:
    """Run parameters for one evolution, a flat key/value document on disk."""

    generations: int = 100
    population_size: int = 50
    tests_per_candidate: int = 5
    mutation_rate: float = 0.1
    mutation_sigma: float = 0.3
    crossover_rate: float = 0.5
    elite_count: int = 2
    weight_range: tuple[float, float] = (-2.0, 2.0)
    master_seed: int = 1

    def __post_init__(self) -> None:
        if self.generations < 0:
            raise EvolutionError("generations must be >= 0")
        if self.population_size < 2:
            raise EvolutionError("populationSize must be >= 2")
        if self.tests_per_candidate < 1:
            raise EvolutionError("testsPerCandidate must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise EvolutionError("mutationRate must lie in [0, 1]")
        if self.mutation_sigma < 0.0:
            raise EvolutionError("mutationSigma must be >= 0")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise EvolutionError("crossoverRate must lie in [0, 1]")
        if not 1 <= self.elite_count < self.population_size:
            raise EvolutionError("eliteCount must satisfy 1 <= eliteCount < populationSize")
        lo, hi = self.weight_range
        if not lo < hi:
            raise EvolutionError("weightRange must satisfy lo < hi")
        object.__setattr__(self, "weight_range", (float(lo), float(hi)))
        if not 0 <= self.master_seed < 2 ** 63:
            raise EvolutionError("masterSeed must be a non-negative 63-bit integer")

    def to_document(self) -> dict:
        return {
            "generations": self.generations,
            "populationSize": self.population_size,
            "testsPerCandidate": self.tests_per_candidate,
            "mutationRate": self.mutation_rate,
            "mutationSigma": self.mutation_sigma,
            "crossoverRate": self.crossover_rate,
            "eliteCount": self.elite_count,
            "weightRange": list(self.weight_range),
            "masterSeed": self.master_seed,
        }

    @classmethod
    def from_document(cls, document: dict) -> "GaConfig":
        known = {
            "generations": ("generations", int),
            "populationSize": ("population_size", int),
            "testsPerCandidate": ("tests_per_candidate", int),
            "mutationRate": ("mutation_rate", float),
            "mutationSigma": ("mutation_sigma", float),
            "crossoverRate": ("crossover_rate", float),
            "eliteCount": ("elite_count", int),
            "masterSeed": ("master_seed", int),
        }
        kwargs = {}
        for key, value in document.items():
            if key == "weightRange":
                lo, hi = value
                kwargs["weight_range"] = (float(lo), float(hi))
            elif key in known:
                field_name, cast = known[key]
                kwargs[field_name] = cast(value)
            else:
                raise EvolutionError(f"unknown GA config key {key!r}")
        return cls(**kwargs)


@dataclass(frozen=True)
class FitnessBreakdown:
    """The three percentage terms and their weighted combination."""

    p_people: float
    p_energy: float
    p_trip: float
    fitness: float

    def __post_init__(self) -> None:
        expected = 1.0 * self.p_people - 0.6 * self.p_trip - 0.4 * self.p_energy
        if self.fitness != expected:
            raise EvolutionError(
                f"fitness {self.fitness!r} is not the exact combination {expected!r}")
        for name in ("p_people", "p_energy", "p_trip"):
            value = getattr(self, name)
            if not -1e-9 <= value <= 100.0 + 1e-9:
                raise EvolutionError(f"{name} outside [0, 100]: {value!r}")

    @classmethod
    def from_percentages(cls, p_people: float, p_energy: float,
                         p_trip: float) -> "FitnessBreakdown":
        return cls(p_people=p_people, p_energy=p_energy, p_trip=p_trip,
                   fitness=1.0 * p_people - 0.6 * p_trip - 0.4 * p_energy)

    def to_json(self) -> dict:
        return {"pPeople": self.p_people, "pEnergy": self.p_energy,
                "pTrip": self.p_trip, "fitness": self.fitness}


def compute_fitness(stats: TrialStats) -> FitnessBreakdown:
    """Score one trial: completion percentage minus weighted trip/energy costs.

    ``pEnergy`` is normalized by the 1.1-per-light-per-tick ceiling and
    ``pTrip`` by the 1.5-per-person-per-tick ceiling, so both land in
    [0, 100] for any legal trial.
    """
    if stats.total_people <= 0:
        raise EvolutionError("fitness precondition violated: totalPeople must be > 0")
    if stats.time_simulation <= 0:
        raise EvolutionError("fitness precondition violated: timeSimulation must be > 0")
    if stats.total_smart_lights <= 0:
        raise EvolutionError("fitness precondition violated: totalSmartLights must be > 0")
    p_people = (stats.completed_people * 100) / stats.total_people
    p_energy = (stats.total_energy * 100) / (
        11 * (stats.time_simulation * stats.total_smart_lights) / 10)
    p_trip = (stats.total_time_trip * 100) / (
        (3 * stats.time_simulation / 2) * stats.total_people)
    return FitnessBreakdown.from_percentages(p_people, p_energy, p_trip)


def genome_digest(genes: Sequence[float]) -> bytes:
    return hashlib.sha256(struct.pack(f"<{len(genes)}d", *genes)).digest()


def trial_seed(master_seed: int, genes: Sequence[float], trial_index: int) -> int:
    """Deterministic sub-seed tied to the genome's content.

    Hashing the genes (rather than the population slot) keeps an elite's
    trial seeds identical across generations, which is what makes the
    best-of-generation series monotone under elitism.
    """
    payload = (struct.pack("<Q", master_seed)
               + genome_digest(genes)
               + struct.pack("<I", trial_index))
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little") >> 1


def _validate_genome(genes: Sequence[float], config: GaConfig) -> Genome:
    genome = tuple(float(g) for g in genes)
    if len(genome) != GENOME_LENGTH:
        raise EvolutionError(f"genome must have {GENOME_LENGTH} genes, got {len(genome)}")
    lo, hi = config.weight_range
    if not all(lo <= g <= hi for g in genome):
        raise EvolutionError(f"genome leaves weightRange [{lo}, {hi}]")
    return genome


def evaluate_candidate(genome: Sequence[float], scenario: Scenario,
                       policy: DiscretizationPolicy, config: GaConfig,
                       generation_index: int = 0,
                       candidate_index: int = 0) -> FitnessBreakdown:
    """Mean breakdown over ``testsPerCandidate`` seeded trials.

    The generation/candidate indices identify the slot for reporting; the
    trial seeds themselves depend only on (masterSeed, genome, trial).
    """
    genome = _validate_genome(genome, config)
    weights = genome_to_weights(genome)
    p_people = p_energy = p_trip = 0.0
    for trial_index in range(config.tests_per_candidate):
        seed = trial_seed(config.master_seed, genome, trial_index)
        breakdown = compute_fitness(run_trial(scenario, weights, policy, seed))
        p_people += breakdown.p_people
        p_energy += breakdown.p_energy
        p_trip += breakdown.p_trip
    n = config.tests_per_candidate
    return FitnessBreakdown.from_percentages(p_people / n, p_energy / n, p_trip / n)


@dataclass
class EvolutionResult:
    best_genome: Genome
    best_breakdown: FitnessBreakdown
    per_generation_best: list[FitnessBreakdown]
    final_population: list[Genome]


def _tournament(population: list[Genome], breakdowns: list[FitnessBreakdown],
                rng: np.random.Generator) -> Genome:
    i, j = (int(x) for x in rng.integers(0, len(population), size=2))
    return population[j] if breakdowns[j].fitness > breakdowns[i].fitness else population[i]


def _crossover(a: Genome, b: Genome, rng: np.random.Generator,
               rate: float) -> Genome:
    if float(rng.random()) >= rate:
        return a
    mask = rng.random(GENOME_LENGTH) < 0.5
    return tuple(a[k] if mask[k] else b[k] for k in range(GENOME_LENGTH))


def _mutate(genome: Genome, rng: np.random.Generator, config: GaConfig) -> Genome:
    lo, hi = config.weight_range
    genes = list(genome)
    for k in range(GENOME_LENGTH):
        if float(rng.random()) < config.mutation_rate:
            genes[k] = min(hi, max(lo, genes[k] + float(rng.normal(0.0, config.mutation_sigma))))
    return tuple(genes)


def _evaluate_population(population: list[Genome], scenario: Scenario,
                         policy: DiscretizationPolicy, config: GaConfig,
                         generation: int, workers: int) -> list[FitnessBreakdown]:
    if workers <= 1:
        return [evaluate_candidate(genome, scenario, policy, config, generation, index)
                for index, genome in enumerate(population)]
    args = [(genome, scenario, policy, config, generation, index)
            for index, genome in enumerate(population)]
    with multiprocessing.Pool(workers) as pool:
        return pool.starmap(evaluate_candidate, args)  # order-preserving


def evolve(scenario: Scenario, policy: DiscretizationPolicy, config: GaConfig,
           on_generation: Optional[Callable[[int, FitnessBreakdown], None]] = None,
           workers: int = 1) -> EvolutionResult:
    """Run the elitist GA and return the best controller genome.

    Generation 0 is the evaluated random initial population; each later
    generation keeps the ``eliteCount`` best verbatim and refills the rest
    with tournament selection (size 2), uniform crossover and clamped
    per-gene Gaussian mutation. ``generations == 0`` degenerates to
    scoring the initial population only.
    """
    rng = np.random.default_rng([config.master_seed, _GA_STREAM])
    lo, hi = config.weight_range
    population: list[Genome] = [
        tuple(float(g) for g in rng.uniform(lo, hi, GENOME_LENGTH))
        for _ in range(config.population_size)
    ]
    total_generations = max(1, config.generations)
    per_generation_best: list[FitnessBreakdown] = []
    best_genome = population[0]
    best_breakdown: Optional[FitnessBreakdown] = None

    for generation in range(total_generations):
        breakdowns = _evaluate_population(population, scenario, policy, config,
                                          generation, workers)
        order = sorted(range(len(population)),
                       key=lambda i: breakdowns[i].fitness, reverse=True)
        best_genome = population[order[0]]
        best_breakdown = breakdowns[order[0]]
        per_generation_best.append(best_breakdown)
        if on_generation is not None:
            on_generation(generation, best_breakdown)
        if generation == total_generations - 1:
            break
        elites = [population[i] for i in order[:config.elite_count]]
        children: list[Genome] = list(elites)
        while len(children) < config.population_size:
            parent_a = _tournament(population, breakdowns, rng)
            parent_b = _tournament(population, breakdowns, rng)
            child = _crossover(parent_a, parent_b, rng, config.crossover_rate)
            children.append(_mutate(child, rng, config))
        population = children

    assert best_breakdown is not None
    return EvolutionResult(
        best_genome=best_genome,
        best_breakdown=best_breakdown,
        per_generation_best=per_generation_best,
        final_population=population,
    )


FITNESS_CSV_HEADER = "generation,bestFitness,pPeople,pEnergy,pTrip"


def fitness_csv_lines(per_generation_best: Sequence[FitnessBreakdown]) -> list[str]:
    """Plot-ready per-generation series, full float precision."""
    lines = [FITNESS_CSV_HEADER]
    for generation, best in enumerate(per_generation_best):
        lines.append(f"{generation},{best.fitness!r},{best.p_people!r},"
                     f"{best.p_energy!r},{best.p_trip!r}")
    return lines
