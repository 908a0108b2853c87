"""Microbial genetic algorithm over pathway genotypes.

One generation is one binary tournament: two distinct genotypes are drawn,
each is trained in place on the shared supernetwork for a fixed window and
scored by its running training accuracy, and the loser is overwritten by a
copy of itself infected layer-wise by the winner and then mutated.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import supernet as sn
from .metrics import MetricsRecord
from .supernet import Architecture, Genotype, SuperNetwork
from .tasks import DatasetError, TaskSpec, batch_stream


@dataclass(frozen=True)
class EvolutionParams:
    population_size: int = 20
    generations: int = 1000
    epochs_per_eval: int = 50
    minibatches_per_epoch: int = 50
    batch_size: int = 16
    learning_rate: float = 0.02
    infection_rate: float = 0.5
    mutation_rate: Optional[float] = None  # None means 1 / (L * P)

    def __post_init__(self):
        problems = []
        for name in ("population_size", "generations", "epochs_per_eval",
                     "minibatches_per_epoch", "batch_size"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("infection_rate", "mutation_rate"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                problems.append(f"{name} must lie in [0, 1], got {v}")
        if self.learning_rate < 0:
            problems.append(f"learning_rate must be >= 0, got {self.learning_rate}")
        if problems:
            raise ValueError("; ".join(problems))

    def mutation_rate_for(self, arch: Architecture) -> float:
        if self.mutation_rate is not None:
            return self.mutation_rate
        return 1.0 / (arch.num_layers * arch.max_path_width)


@dataclass
class EvolutionState:
    population: list[Genotype]
    rng: np.random.Generator
    tournaments_completed: int = 0
    evaluations_completed: int = 0
    best_seen: Optional[tuple[Genotype, float]] = None

    def observe(self, genotype: Genotype, fitness: float) -> None:
        self.evaluations_completed += 1
        if self.best_seen is None or fitness > self.best_seen[1]:
            self.best_seen = (genotype, fitness)


@dataclass
class EpochTrace:
    mean_loss: float
    accuracy: float


@dataclass
class TournamentResult:
    winner_index: int
    loser_index: int
    winner_fitness: float
    loser_fitness: float
    new_loser: Genotype
    # per drawn path, in draw order
    drawn: tuple[int, int] = (0, 0)
    evaluated: tuple[Genotype, ...] = ()
    fitnesses: tuple[float, ...] = ()
    traces: tuple[list[EpochTrace], ...] = ()
    wallclock_ms: tuple[float, ...] = ()


FitnessFn = Callable[..., tuple[float, list[EpochTrace]]]


def random_genotype(arch: Architecture, rng: np.random.Generator) -> Genotype:
    layers = []
    for _ in range(arch.num_layers):
        width = int(rng.integers(1, arch.max_path_width + 1))
        layers.append(rng.choice(arch.modules_per_layer, size=width, replace=False))
    return Genotype.from_layers(layers)


def random_population(arch: Architecture, size: int, rng: np.random.Generator) -> list[Genotype]:
    return [random_genotype(arch, rng) for _ in range(size)]


def recombine(winner: Genotype, loser: Genotype, infection_rate: float,
              rng: np.random.Generator) -> Genotype:
    """Each layer of the loser is replaced by the winner's with ``infection_rate``."""
    if len(winner.genes) != len(loser.genes):
        raise sn.GenotypeError("winner and loser have different layer counts")
    genes = tuple(w if rng.random() < infection_rate else l
                  for w, l in zip(winner.genes, loser.genes))
    return Genotype(genes)


def mutate(g: Genotype, mutation_rate: float, arch: Architecture,
           rng: np.random.Generator) -> Genotype:
    """Point mutation that keeps every layer's width.

    A selected gene gets a uniform draw from ``[0, M)``; draws already present
    in the layer (including the gene itself) are rejected, and after ``M``
    rejections the gene is left alone.
    """
    M = arch.modules_per_layer
    layers = []
    for modules in g.genes:
        current = list(modules)
        for pos in range(len(current)):
            if rng.random() >= mutation_rate:
                continue
            for _ in range(M):
                candidate = int(rng.integers(M))
                if candidate not in current:
                    current[pos] = candidate
                    break
        layers.append(current)
    return Genotype.from_layers(layers)


def evaluate_fitness(net: SuperNetwork, genotype: Genotype, task: TaskSpec,
                     params: EvolutionParams,
                     rng: np.random.Generator) -> tuple[float, list[EpochTrace]]:
    """Train ``genotype`` in place and return its running training accuracy.

    The fitness counts correct predictions over every batch of the window,
    each batch scored before its own update.
    """
    if len(task.train) < params.batch_size:
        raise DatasetError(
            f"task {task.task_id}: {len(task.train)} training rows < batch_size {params.batch_size}")
    genotype.validate(net.arch)
    stream = batch_stream(task.train, params.batch_size, rng)
    trace = []
    correct = seen = 0.0
    for _ in range(params.epochs_per_eval):
        losses, hits = 0.0, 0.0
        for _ in range(params.minibatches_per_epoch):
            x, y = next(stream)
            loss, acc = sn.backward_and_update(net, genotype, task.task_id, x, y,
                                               params.learning_rate)
            losses += loss
            hits += acc * len(y)
        n = params.minibatches_per_epoch * params.batch_size
        trace.append(EpochTrace(losses / params.minibatches_per_epoch, hits / n))
        correct += hits
        seen += n
    return correct / seen, trace


def microbial_tournament(state: EvolutionState, net: SuperNetwork, task: TaskSpec,
                         params: EvolutionParams,
                         evaluate: FitnessFn = evaluate_fitness) -> TournamentResult:
    pop = state.population
    if len(pop) < 2:
        raise ValueError("a tournament needs a population of at least 2")
    first, second = (int(i) for i in state.rng.choice(len(pop), size=2, replace=False))
    fits, traces, times, evaluated = [], [], [], []
    for idx in (first, second):
        g = pop[idx]
        t0 = time.perf_counter()
        fitness, trace = evaluate(net, g, task, params, state.rng)
        times.append((time.perf_counter() - t0) * 1000.0)
        fits.append(float(fitness))
        traces.append(trace)
        evaluated.append(g)
        state.observe(g, float(fitness))
    # ties go against the second draw
    if fits[0] >= fits[1]:
        w, l, wf, lf = first, second, fits[0], fits[1]
    else:
        w, l, wf, lf = second, first, fits[1], fits[0]
    child = recombine(pop[w], pop[l], params.infection_rate, state.rng)
    child = mutate(child, params.mutation_rate_for(net.arch), net.arch, state.rng)
    pop[l] = child
    state.tournaments_completed += 1
    return TournamentResult(w, l, wf, lf, child, (first, second), tuple(evaluated),
                            tuple(fits), tuple(traces), tuple(times))


def evolve(net: SuperNetwork, task: TaskSpec, params: EvolutionParams,
           state: EvolutionState, budget: int,
           hooks: Iterable[Callable[[MetricsRecord], None]] = (), *,
           phase: str = "source", iteration: int = 1, seed: int = 0,
           evaluate: FitnessFn = evaluate_fitness) -> tuple[EvolutionState, list[MetricsRecord]]:
    """Run ``budget`` tournaments, emitting one record per path evaluation."""
    hooks = list(hooks)
    rows = []
    for _ in range(budget):
        generation = state.tournaments_completed
        result = microbial_tournament(state, net, task, params, evaluate)
        for path_index in range(2):
            trace = result.traces[path_index]
            mean_loss = float(np.mean([t.mean_loss for t in trace])) if trace else 0.0
            rec = MetricsRecord(phase, iteration, generation, path_index,
                                sn.to_text(result.evaluated[path_index]),
                                result.fitnesses[path_index], mean_loss,
                                wallclock_ms=result.wallclock_ms[path_index], seed=seed)
            rows.append(rec)
            for hook in hooks:
                hook(rec)
    return state, rows
