"""Genetic training engine for the model zoo.

Population lifecycle with proportional selection, three crossover kinds,
relative mutation, elitism, and a simulation runner that records fitness
and timing traces. Per-slot RNG streams are derived from
(seed, generation, slot) so a run replays identically for any worker
count or evaluation order.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .neuro_models import Model

CROSSOVER_KINDS = ("SinglePoint", "DoublePoint", "UniformPerParameter")
FITNESS_KINDS = ("Distance", "Accuracy")

_SELF_PAIR_ATTEMPTS = 100


@dataclass(frozen=True)
class GeneticConfig:
    mutation_rate: float
    mutation_size: float
    generation_size: int
    elitism: float
    offset_size: float
    crossover_kind: str
    fitness_kind: str
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError(f"mutation_rate {self.mutation_rate} outside [0, 1]")
        if not 0.0 <= self.elitism <= 1.0:
            raise ValueError(f"elitism {self.elitism} outside [0, 1]")
        if self.mutation_size < 0.0:
            raise ValueError(f"mutation_size {self.mutation_size} must be >= 0")
        if self.offset_size < 0.0:
            raise ValueError(f"offset_size {self.offset_size} must be >= 0")
        if self.generation_size < 2:
            raise ValueError(f"generation_size {self.generation_size} must be >= 2")
        if self.crossover_kind not in CROSSOVER_KINDS:
            raise ValueError(
                f"crossover_kind {self.crossover_kind!r} not one of {CROSSOVER_KINDS}"
            )
        if self.fitness_kind not in FITNESS_KINDS:
            raise ValueError(
                f"fitness_kind {self.fitness_kind!r} not one of {FITNESS_KINDS}"
            )


@dataclass
class Member:
    model: Model
    fitness: float | None = None


@dataclass
class Population:
    members: list
    generation_index: int = 0


class TrainingSet:
    """Stacked training pairs: inputs plus expected output vectors."""

    def __init__(self, inputs, expected):
        inputs = np.asarray(inputs, dtype=float)
        expected = np.asarray(expected, dtype=float)
        if expected.ndim != 2:
            raise ValueError("expected outputs must be a 2-D array, one row per pair")
        if inputs.shape[0] != expected.shape[0]:
            raise ValueError(
                f"{inputs.shape[0]} inputs but {expected.shape[0]} expected outputs"
            )
        if inputs.shape[0] == 0:
            raise ValueError("training set must be nonempty")
        self.inputs = inputs
        self.expected = expected

    @classmethod
    def from_pairs(cls, pairs):
        inputs = np.stack([np.asarray(x, dtype=float) for x, _ in pairs])
        expected = np.stack([np.asarray(y, dtype=float) for _, y in pairs])
        return cls(inputs, expected)

    @property
    def n_pairs(self) -> int:
        return self.inputs.shape[0]


def distance_fitness(model: Model, data: TrainingSet) -> float:
    """1 / (1 + mean L2 distance to the expected vectors); in (0, 1]."""
    out = model.forward_batch(data.inputs)
    if out.shape != data.expected.shape:
        raise ValueError(
            f"model outputs shaped {out.shape}, expected {data.expected.shape}"
        )
    dists = np.sqrt(np.sum((out - data.expected) ** 2, axis=1))
    return float(1.0 / (1.0 + dists.mean()))


def accuracy_fitness(model: Model, data: TrainingSet) -> float:
    """Fraction of pairs whose argmax matches the one-hot expected class."""
    expected = data.expected
    ones = expected == 1.0
    if not (np.all((expected == 0.0) | ones) and np.all(ones.sum(axis=1) == 1)):
        raise ValueError("expected outputs must be one-hot vectors")
    out = model.forward_batch(data.inputs)
    if out.shape != expected.shape:
        raise ValueError(f"model outputs shaped {out.shape}, expected {expected.shape}")
    return float(np.mean(np.argmax(out, axis=1) == np.argmax(expected, axis=1)))


_FITNESS_FNS = {"Distance": distance_fitness, "Accuracy": accuracy_fitness}


def proportional_select(scores, rng) -> int:
    """Draw an index with probability score/sum; uniform when all zero."""
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        raise ValueError("scores must be nonempty")
    if np.any(scores < 0.0):
        raise ValueError("scores must be non-negative")
    total = scores.sum()
    if total == 0.0:
        probs = np.full(scores.size, 1.0 / scores.size)
    else:
        probs = scores / total
    idx = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    return min(idx, scores.size - 1)


def crossover(parent_a, parent_b, kind: str, rng) -> np.ndarray:
    a = np.asarray(parent_a, dtype=float)
    b = np.asarray(parent_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"parents shaped {a.shape} and {b.shape} must match, 1-D")
    n = a.size
    if n < 2:
        raise ValueError("parents need at least 2 parameters")
    if kind == "SinglePoint":
        cut = int(rng.integers(1, n))
        return np.concatenate([a[:cut], b[cut:]])
    if kind == "DoublePoint":
        if n < 3:
            raise ValueError("DoublePoint crossover needs at least 3 parameters")
        cuts = np.sort(rng.choice(np.arange(1, n), size=2, replace=False))
        return np.concatenate([a[:cuts[0]], b[cuts[0]:cuts[1]], a[cuts[1]:]])
    if kind == "UniformPerParameter":
        return np.where(rng.random(n) < 0.5, a, b)
    raise ValueError(f"crossover kind {kind!r} not one of {CROSSOVER_KINDS}")


def mutate(v, rate: float, size: float, rng) -> np.ndarray:
    """Perturb each parameter with probability rate by up to +-size,
    relative to its magnitude with an absolute floor of 1."""
    v = np.asarray(v, dtype=float)
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate {rate} outside [0, 1]")
    if size < 0.0:
        raise ValueError(f"size {size} must be >= 0")
    out = v.copy()
    if rate == 0.0 or size == 0.0:
        return out
    mask = rng.random(v.size) < rate
    steps = rng.uniform(-size, size, size=v.size)
    out[mask] += steps[mask] * np.maximum(np.abs(v[mask]), 1.0)
    return out


def apply_elitism(members, elitism: float):
    """Top floor(elitism * size) members by fitness; ties keep lower index."""
    count = int(elitism * len(members))
    if count == 0:
        return []
    order = sorted(range(len(members)), key=lambda i: (-members[i].fitness, i))
    return [Member(members[i].model, members[i].fitness) for i in order[:count]]


def evaluate_population(pop: Population, data: TrainingSet, cfg: GeneticConfig,
                        workers: int = 1) -> list:
    """Score every unscored member in place; returns the fitness list.

    Evaluation is pure per member, so the thread pool returns results
    bitwise equal to sequential evaluation in any worker count.
    """
    fn = _FITNESS_FNS[cfg.fitness_kind]

    def score(member: Member) -> float:
        if member.fitness is None:
            member.fitness = fn(member.model, data)
        return member.fitness

    if workers <= 1:
        return [score(m) for m in pop.members]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(score, pop.members))


def init_population(template: Model, cfg: GeneticConfig) -> Population:
    """Scatter generation_size copies of the template with rate-1 mutation
    of magnitude offset_size, one seeded stream per slot."""
    base = template.get_params()
    members = []
    for slot in range(cfg.generation_size):
        rng = np.random.default_rng([cfg.seed, 0, slot])
        members.append(Member(template.set_params(mutate(base, 1.0, cfg.offset_size, rng))))
    return Population(members, generation_index=0)


def run_generation(pop: Population, data: TrainingSet, cfg: GeneticConfig,
                   workers: int = 1):
    """One generation step: score, preserve elites, breed the rest.

    Returns (next population, average fitness, best fitness) where the
    stats describe the population that was just scored.
    """
    scores = evaluate_population(pop, data, cfg, workers)
    avg = float(np.mean(scores))
    best = float(np.max(scores))

    elites = apply_elitism(pop.members, cfg.elitism)
    next_gen = pop.generation_index + 1
    params = [m.model.get_params() for m in pop.members]
    members = list(elites)
    for slot in range(len(elites), cfg.generation_size):
        rng = np.random.default_rng([cfg.seed, next_gen, slot])
        pa = proportional_select(scores, rng)
        pb = proportional_select(scores, rng)
        for _ in range(_SELF_PAIR_ATTEMPTS):
            if pb != pa:
                break
            pb = proportional_select(scores, rng)
        child = crossover(params[pa], params[pb], cfg.crossover_kind, rng)
        child = mutate(child, cfg.mutation_rate, cfg.mutation_size, rng)
        members.append(Member(pop.members[pa].model.set_params(child)))
    return Population(members, next_gen), avg, best


@dataclass
class SimulationResult:
    trace: list = field(default_factory=list)  # (generation, avg, best)
    timings: list = field(default_factory=list)  # (generation, elapsed_s)
    best_model: Model | None = None
    best_fitness: float = float("-inf")


def run_simulation(template: Model, data: TrainingSet, cfg: GeneticConfig,
                   generations: int, workers: int = 1,
                   clock=time.perf_counter) -> SimulationResult:
    """Run the genetic algorithm for `generations` steps.

    The trace holds one row per completed generation; the returned model
    is the best ever scored, which for generations=0 means the best of
    the scored initial population.
    """
    if generations < 0:
        raise ValueError(f"generations {generations} must be >= 0")
    result = SimulationResult()
    pop = init_population(template, cfg)

    def track_best(population: Population):
        for member in population.members:
            if member.fitness is not None and member.fitness > result.best_fitness:
                result.best_fitness = member.fitness
                result.best_model = member.model

    if generations == 0:
        evaluate_population(pop, data, cfg, workers)
        track_best(pop)
        return result

    for gen in range(generations):
        t0 = clock()
        scored = pop  # run_generation scores these members in place
        pop, avg, best = run_generation(pop, data, cfg, workers)
        elapsed = clock() - t0
        result.trace.append((gen, avg, best))
        result.timings.append((gen, elapsed))
        track_best(scored)
    return result


def write_fitness_csv(result: SimulationResult, path) -> None:
    with open(path, "w") as fh:
        fh.write("generation,avg_fitness,best_fitness\n")
        for gen, avg, best in result.trace:
            fh.write(f"{gen},{avg!r},{best!r}\n")


def write_timing_csv(result: SimulationResult, path) -> None:
    with open(path, "w") as fh:
        fh.write("generation,elapsed_s\n")
        for gen, elapsed in result.timings:
            fh.write(f"{gen},{elapsed!r}\n")


def save_best_model(result: SimulationResult, path) -> None:
    if result.best_model is None:
        raise ValueError("simulation holds no scored model")
    with open(path, "w") as fh:
        fh.write(result.best_model.to_json())
