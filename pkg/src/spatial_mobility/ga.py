"""Genetic algorithm over prefix-length chromosomes.

A chromosome stores, for every (origin, destination) pair, how many of the
pair's weight-sorted candidates are moved. Decoding selects the first ``n``
candidates of each list, so the priority (prefix) constraint holds for every
genotype; capacity is restored by :func:`repair` before any evaluation.

Randomness comes from PCG64 substreams keyed on ``(seed, generation, slot)``,
which keeps a run reproducible whatever the evaluation worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _kernels
from .instance import Instance, Pair, PairLayout, ValidationError, format_number
from .model import AssignmentMatrix

logger = logging.getLogger(__name__)

SELECTION_METHODS = ("rank", "roulette", "tournament")


class Chromosome:
    """Prefix lengths, one gene per pair in :meth:`Instance.pairs` order."""

    __slots__ = ("genes",)

    def __init__(self, genes: Sequence[int] | np.ndarray):
        self.genes = np.array(genes, dtype=np.int64)
        self.genes.setflags(write=False)

    @classmethod
    def from_mapping(cls, instance: Instance, prefixes: Mapping[Pair, int]) -> "Chromosome":
        unknown = set(prefixes) - set(instance.pairs())
        if unknown:
            raise ValidationError(f"unknown pairs {sorted(unknown)}")
        return cls([prefixes.get(p, 0) for p in instance.pairs()])

    @classmethod
    def zeros(cls, instance: Instance) -> "Chromosome":
        return cls(np.zeros(len(instance.pairs()), dtype=np.int64))

    @classmethod
    def full(cls, instance: Instance) -> "Chromosome":
        return cls(instance.layout.cardinality)

    def as_dict(self, instance: Instance) -> dict[Pair, int]:
        return {p: int(n) for p, n in zip(instance.pairs(), self.genes)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Chromosome):
            return NotImplemented
        return np.array_equal(self.genes, other.genes)

    def __hash__(self) -> int:
        return hash(self.genes.tobytes())

    def __repr__(self) -> str:
        return f"Chromosome({self.genes.tolist()})"


def _check_bounds(c: Chromosome, layout: PairLayout) -> None:
    if c.genes.shape != layout.cardinality.shape:
        raise ValidationError(f"chromosome has {c.genes.size} genes, instance has {layout.cardinality.size} pairs")
    bad = np.flatnonzero((c.genes < 0) | (c.genes > layout.cardinality))
    if bad.size:
        p = int(bad[0])
        raise ValidationError(
            f"gene {layout.pairs[p]} = {int(c.genes[p])} outside [0, {int(layout.cardinality[p])}]")


def decode(c: Chromosome, instance: Instance) -> AssignmentMatrix:
    _check_bounds(c, instance.layout)
    return AssignmentMatrix.from_prefixes(instance, c.as_dict(instance))


def encode(x: AssignmentMatrix, instance: Instance) -> Chromosome:
    """Inverse of :func:`decode` for prefix-shaped matrices."""
    genes = []
    for j, k in instance.pairs():
        row = x.row(j, k)
        n = int(row.sum())
        if not row[:n].all():
            raise ValidationError(f"row {(j, k)} is not a prefix")
        genes.append(n)
    return Chromosome(genes)


def repair(c: Chromosome, instance: Instance) -> Chromosome:
    """Shorten the prefix with the lightest last candidate until each destination fits.

    Ties on that last weight drop from the higher origin index first.
    """
    layout = instance.layout
    _check_bounds(c, layout)
    genes = c.genes.copy()[None, :]
    _kernels.repair_population(genes, layout.dest, layout.weights, layout.capacities)
    return Chromosome(genes[0])


def fitness(c: Chromosome, instance: Instance) -> float:
    """Objective value of the repaired phenotype."""
    layout = instance.layout
    genes = repair(c, instance).genes[None, :].copy()
    return float(_kernels.evaluate_population(genes, layout.prefix)[0])


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def _selection_weights(values: np.ndarray, method: str) -> np.ndarray | None:
    if method == "rank":
        ranks = np.empty(values.size)
        ranks[np.argsort(values, kind="stable")] = np.arange(1, values.size + 1)
        return ranks / ranks.sum()
    if method == "roulette":
        total = values.sum()
        if total <= 0:
            return np.full(values.size, 1.0 / values.size)
        return values / total
    return None


def _select_indices(values: np.ndarray, method: str, rng: np.random.Generator,
                    tournament_size: int, probs: np.ndarray | None) -> tuple[int, int]:
    n = values.size
    if method == "tournament":
        size = min(tournament_size, n)
        picks = []
        for _ in range(2):
            draw = rng.choice(n, size=size, replace=False)
            picks.append(int(draw[np.argmax(values[draw])]))
        return picks[0], picks[1]
    a, b = rng.choice(n, size=2, replace=True, p=probs)
    return int(a), int(b)


def select(population: Sequence, values: Sequence[float], method: str, rng: np.random.Generator,
           tournament_size: int = 2) -> tuple:
    """Draw two parents by rank, roulette or tournament selection."""
    if not population:
        raise ValidationError("cannot select from an empty population")
    if len(values) != len(population):
        raise ValidationError("values must align with the population")
    if method not in SELECTION_METHODS:
        raise ValidationError(f"unknown selection method {method!r}")
    v = np.asarray(values, dtype=np.float64)
    a, b = _select_indices(v, method, rng, tournament_size, _selection_weights(v, method))
    return population[a], population[b]


def _draw_crossover(rng: np.random.Generator, p_x: float, n_genes: int) -> np.ndarray | None:
    # fixed draw count per call keeps the stream aligned whatever the outcome
    hit = rng.random() < p_x
    take_b = rng.random(n_genes) < 0.5
    return take_b if hit else None


def _draw_mutation(rng: np.random.Generator, p_m: float, n_genes: int) -> np.ndarray:
    hit = rng.random(n_genes) < p_m
    up = rng.integers(0, 2, size=n_genes)
    return np.where(hit, 2 * up - 1, 0)


def crossover(a: Chromosome, b: Chromosome, p_x: float, rng: np.random.Generator,
              instance: Instance) -> tuple[Chromosome, Chromosome]:
    """Uniform gene exchange with probability ``p_x``; children are repaired."""
    take_b = _draw_crossover(rng, p_x, a.genes.size)
    if take_b is None:
        c1, c2 = a.genes, b.genes
    else:
        c1 = np.where(take_b, b.genes, a.genes)
        c2 = np.where(take_b, a.genes, b.genes)
    return repair(Chromosome(c1), instance), repair(Chromosome(c2), instance)


def mutate(c: Chromosome, p_m: float, rng: np.random.Generator, instance: Instance) -> Chromosome:
    """Move each gene one step up or down with probability ``p_m`` (clamped), then repair."""
    step = _draw_mutation(rng, p_m, c.genes.size)
    genes = np.clip(c.genes + step, 0, instance.layout.cardinality)
    return repair(Chromosome(genes), instance)


# ---------------------------------------------------------------------------
# configuration and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GAConfig:
    population_size: int = 30
    crossover_probability: float = 0.8
    mutation_probability: float = 0.1
    selection_method: str = "tournament"
    tournament_size: int = 2
    max_generations: int = 200
    stagnation_limit: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValidationError("population_size must be at least 2")
        for name in ("crossover_probability", "mutation_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {p}")
        if self.selection_method not in SELECTION_METHODS:
            raise ValidationError(f"unknown selection method {self.selection_method!r}")
        if self.tournament_size < 1:
            raise ValidationError("tournament_size must be positive")
        if self.max_generations < 1 or self.stagnation_limit < 1:
            raise ValidationError("max_generations and stagnation_limit must be positive")
        if self.stagnation_limit > self.max_generations:
            raise ValidationError("stagnation_limit cannot exceed max_generations")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


_CONFIG_KEYS = {
    "population": ("population_size", int),
    "px": ("crossover_probability", float),
    "pm": ("mutation_probability", float),
    "selection": ("selection_method", str),
    "tournament_size": ("tournament_size", int),
    "max_generations": ("max_generations", int),
    "stagnation": ("stagnation_limit", int),
    "seed": ("seed", int),
}


def parse_config(text: str, base: GAConfig | None = None) -> GAConfig:
    """Read ``key = value`` lines; unset keys keep the defaults."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = (s.strip() for s in line.partition("="))
        if not sep:
            raise ValidationError(f"config line {lineno}: expected key = value")
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        name, conv = _CONFIG_KEYS[key]
        try:
            values[name] = conv(raw)
        except ValueError:
            raise ValidationError(f"config line {lineno}: bad value {raw!r} for {key}") from None
    base = base or GAConfig()
    return GAConfig(**{**base.__dict__, **values})


@dataclass(frozen=True)
class TraceEntry:
    generation: int
    best: float
    mean: float


@dataclass
class SolveResult:
    best: AssignmentMatrix
    best_value: float
    best_chromosome: Chromosome
    generations_run: int
    fitness_trace: list[TraceEntry] = field(default_factory=list)
    final_population_values: tuple[float, ...] = ()


def format_trace_csv(result: SolveResult) -> str:
    lines = ["generation,best,mean"]
    lines += [f"{t.generation},{format_number(t.best)},{format_number(t.mean)}" for t in result.fitness_trace]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------

def _stream(seed: int, generation: int, slot: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, generation, slot])))


class _Evaluator:
    """Repair and evaluate a batch, optionally split across threads.

    Rows are independent, so chunking cannot change the result.
    """

    def __init__(self, layout: PairLayout, workers: int):
        self.layout = layout
        self.workers = max(1, workers)
        self.pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def _run(self, fn, genes: np.ndarray) -> np.ndarray:
        if self.pool is None or genes.shape[0] < 2:
            return fn(np.ascontiguousarray(genes))
        chunks = np.array_split(np.arange(genes.shape[0]), min(self.workers, genes.shape[0]))
        return np.concatenate(list(self.pool.map(lambda idx: fn(genes[idx]), chunks)))

    def repair(self, genes: np.ndarray) -> np.ndarray:
        L = self.layout
        return self._run(lambda g: _kernels.repair_population(g, L.dest, L.weights, L.capacities), genes)

    def evaluate(self, genes: np.ndarray) -> np.ndarray:
        return self._run(lambda g: _kernels.evaluate_population(g, self.layout.prefix), genes)

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()


GenerationHook = Callable[[int, np.ndarray, np.ndarray], None]


def evolve(instance: Instance, config: GAConfig | None = None, workers: int = 1,
           on_generation: GenerationHook | None = None) -> SolveResult:
    """Run the generational loop and return the best assignment found.

    Each generation: select two parents per child pair, cross them over,
    mutate the children, repair, evaluate, then carry the previous best into
    the new population (elitism). Stops after ``max_generations`` or after
    ``stagnation_limit`` generations without a strict improvement.

    ``on_generation(generation, genes, values)`` sees every evaluated
    population; ``genes`` rows are repaired prefix-length vectors.
    """
    config = config or GAConfig()
    if not instance.is_canonical():
        raise ValidationError("evolve needs a canonicalized instance")
    layout = instance.layout
    n_pop, n_genes = config.population_size, layout.cardinality.size
    card = layout.cardinality
    evaluator = _Evaluator(layout, workers)
    try:
        genes = np.empty((n_pop, n_genes), dtype=np.int64)
        for i in range(n_pop):
            genes[i] = _stream(config.seed, 1, i).integers(0, card + 1)
        genes = evaluator.repair(genes)
        values = evaluator.evaluate(genes)

        trace = []
        generation = 1
        elite = int(np.argmax(values))
        best_value, best_genes = float(values[elite]), genes[elite].copy()
        stagnation = 0
        trivial = not card.any()
        while True:
            trace.append(TraceEntry(generation, float(values.max()), float(values.mean())))
            if on_generation is not None:
                on_generation(generation, genes.copy(), values.copy())
            if trivial or generation >= config.max_generations or stagnation >= config.stagnation_limit:
                break
            generation += 1

            n_children = n_pop - 1
            n_slots = (n_children + 1) // 2
            probs = _selection_weights(values, config.selection_method)
            children = np.empty((2 * n_slots, n_genes), dtype=np.int64)
            steps = np.empty_like(children)
            for q in range(n_slots):
                rng = _stream(config.seed, generation, q)
                a, b = _select_indices(values, config.selection_method, rng, config.tournament_size, probs)
                take_b = _draw_crossover(rng, config.crossover_probability, n_genes)
                if take_b is None:
                    children[2 * q], children[2 * q + 1] = genes[a], genes[b]
                else:
                    children[2 * q] = np.where(take_b, genes[b], genes[a])
                    children[2 * q + 1] = np.where(take_b, genes[a], genes[b])
                steps[2 * q] = _draw_mutation(rng, config.mutation_probability, n_genes)
                steps[2 * q + 1] = _draw_mutation(rng, config.mutation_probability, n_genes)
            children = evaluator.repair(children)
            children = np.clip(children + steps, 0, card)
            children = evaluator.repair(children)[:n_children]
            child_values = evaluator.evaluate(children)

            genes = np.concatenate([genes[elite][None, :], children])
            values = np.concatenate([values[elite:elite + 1], child_values])
            elite = int(np.argmax(values))
            if values[elite] > best_value:
                best_value, best_genes = float(values[elite]), genes[elite].copy()
                stagnation = 0
            else:
                stagnation += 1
    finally:
        evaluator.close()

    chromosome = Chromosome(best_genes)
    logger.debug("evolve: %d generations, best %s", generation, best_value)
    return SolveResult(
        best=decode(chromosome, instance),
        best_value=best_value,
        best_chromosome=chromosome,
        generations_run=generation,
        fitness_trace=trace,
        final_population_values=tuple(sorted(float(v) for v in values)),
    )

