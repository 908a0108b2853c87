"""Freeze-and-reevolve transfer between a source and a destination task.

Each iteration evolves a fresh population on the source task, freezes the
best path and reinitializes every other module, then does the same on the
destination task.  A scratch baseline evolves the destination task on a
brand-new network with the same budget, using its own random stream.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from . import supernet as sn
from .evolution import EvolutionParams, EvolutionState, evolve, random_population
from .metrics import MetricsRecord
from .supernet import Architecture, Genotype, SuperNetwork
from .tasks import TaskSpec
from .tensorcore import make_rng

ROLES = ("source", "destination", "scratch")
TRANSFER_STREAM = 0
SCRATCH_STREAM = 1


@dataclass(frozen=True)
class TransferPlan:
    iterations: int = 4
    source_budget: int = 1000
    destination_budget: int = 1000
    scratch_baseline: bool = True
    consolidate_destination: bool = True

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.source_budget < 1 or self.destination_budget < 1:
            raise ValueError("stage budgets must be >= 1")

    def stages(self) -> list[tuple[int, str, int]]:
        """Ordered (iteration, role, generation budget) triples."""
        out = []
        for it in range(1, self.iterations + 1):
            out.append((it, "source", self.source_budget))
            out.append((it, "destination", self.destination_budget))
            if self.scratch_baseline:
                out.append((it, "scratch", self.destination_budget))
        return out


@dataclass
class StageOutcome:
    task_id: str
    role: str
    iteration: int
    best_genotype: Genotype
    best_fitness: float
    final_eval_accuracy: float
    final_train_loss: float
    metrics: list[MetricsRecord] = field(default_factory=list)


@dataclass
class IterationResult:
    iteration: int
    source: StageOutcome
    destination: StageOutcome
    scratch: Optional[StageOutcome] = None

    @property
    def transfer_acc(self) -> float:
        return self.destination.final_eval_accuracy

    @property
    def transfer_loss(self) -> float:
        return self.destination.final_train_loss

    @property
    def scratch_acc(self) -> Optional[float]:
        return None if self.scratch is None else self.scratch.final_eval_accuracy

    @property
    def scratch_loss(self) -> Optional[float]:
        return None if self.scratch is None else self.scratch.final_train_loss


@dataclass
class ExperimentReport:
    source_task: str
    destination_task: str
    seed: int
    iterations: list[IterationResult]
    metrics: list[MetricsRecord]
    frozen_modules: list[tuple[int, int]]


def stage_task(task: TaskSpec, role: str, iteration: int) -> TaskSpec:
    """The task under a stage-local id, so every stage trains its own readout head."""
    return dataclasses.replace(task, task_id=f"{task.task_id}/{role}{iteration}")


def begin_stage(net: SuperNetwork, task: TaskSpec, params: EvolutionParams,
                rng: np.random.Generator) -> EvolutionState:
    if task.task_id not in net.heads:
        sn.register_head(net, task.task_id, task.num_classes, rng)
    if task.dim != net.arch.input_dim:
        raise ValueError(f"task {task.task_id} has dim {task.dim}, network expects {net.arch.input_dim}")
    return EvolutionState(random_population(net.arch, params.population_size, rng), rng)


def finish_stage(net: SuperNetwork, task: TaskSpec, state: EvolutionState, *,
                 role: str, iteration: int, seed: int,
                 rows: list[MetricsRecord]) -> StageOutcome:
    best, best_fitness = state.best_seen
    _, eval_acc = sn.evaluate(net, best, task.task_id, task.eval.features, task.eval.labels)
    train_loss, _ = sn.evaluate(net, best, task.task_id, task.train.features, task.train.labels)
    summary = MetricsRecord(role, iteration, state.tournaments_completed, None, sn.to_text(best),
                            best_fitness, train_loss, eval_accuracy=eval_acc, seed=seed)
    return StageOutcome(task.task_id, role, iteration, best, best_fitness, eval_acc, train_loss,
                        list(rows) + [summary])


def run_stage(net: SuperNetwork, task: TaskSpec, params: EvolutionParams, budget: int,
              rng: np.random.Generator, *, role: str = "source", iteration: int = 1,
              seed: int = 0, hooks: Iterable[Callable[[MetricsRecord], None]] = ()
              ) -> tuple[SuperNetwork, EvolutionState, StageOutcome]:
    """Evolve a fresh population on ``task`` for ``budget`` generations."""
    state = begin_stage(net, task, params, rng)
    state, rows = evolve(net, task, params, state, budget, hooks,
                         phase=role, iteration=iteration, seed=seed)
    return net, state, finish_stage(net, task, state, role=role, iteration=iteration,
                                    seed=seed, rows=rows)


def consolidate(net: SuperNetwork, outcome: StageOutcome,
                rng: np.random.Generator) -> SuperNetwork:
    """Freeze the stage's best path and redraw every module that is still free."""
    sn.freeze_path(net, outcome.best_genotype)
    sn.reinit_unfrozen(net, rng)
    return net


class TransferRun:
    """Resumable driver for a full transfer experiment.

    The run advances one generation at a time, so it can stop after any
    number of tournaments and be serialized; see ``pathnet.harness.checkpoint``.
    """

    def __init__(self, plan: TransferPlan, source_task: TaskSpec, dest_task: TaskSpec,
                 arch: Architecture, params: EvolutionParams, seed: int):
        self.plan = plan
        self.source_task = source_task
        self.dest_task = dest_task
        self.arch = arch
        self.params = params
        self.seed = int(seed)
        self.schedule = plan.stages()
        self.rng = make_rng(np.random.SeedSequence(self.seed, spawn_key=(TRANSFER_STREAM,)))
        self.net = sn.init_supernet(arch, self.rng)
        self.scratch_net: Optional[SuperNetwork] = None
        self.scratch_rng: Optional[np.random.Generator] = None
        self.stage_index = 0
        self.state: Optional[EvolutionState] = None
        self.stage_rows: list[MetricsRecord] = []
        self.outcomes: list[StageOutcome] = []
        self.metrics: list[MetricsRecord] = []
        self.generations_run = 0
        self.hooks: list[Callable[[MetricsRecord], None]] = []

    @property
    def done(self) -> bool:
        return self.stage_index >= len(self.schedule)

    def current_stage(self) -> tuple[int, str, int]:
        return self.schedule[self.stage_index]

    def _stage_objects(self) -> tuple[SuperNetwork, TaskSpec]:
        iteration, role, _ = self.current_stage()
        base = self.source_task if role == "source" else self.dest_task
        net = self.scratch_net if role == "scratch" else self.net
        return net, stage_task(base, role, iteration)

    def _begin(self) -> None:
        iteration, role, _ = self.current_stage()
        if role == "scratch":
            self.scratch_rng = make_rng(
                np.random.SeedSequence(self.seed, spawn_key=(SCRATCH_STREAM, iteration)))
            self.scratch_net = sn.init_supernet(self.arch, self.scratch_rng)
            rng = self.scratch_rng
        else:
            rng = self.rng
        net, task = self._stage_objects()
        self.state = begin_stage(net, task, self.params, rng)
        self.stage_rows = []

    def _finish(self) -> None:
        iteration, role, _ = self.current_stage()
        net, task = self._stage_objects()
        outcome = finish_stage(net, task, self.state, role=role, iteration=iteration,
                               seed=self.seed, rows=self.stage_rows)
        self.metrics.append(outcome.metrics[-1])
        for hook in self.hooks:
            hook(outcome.metrics[-1])
        self.outcomes.append(outcome)
        if role == "source" or (role == "destination" and self.plan.consolidate_destination):
            consolidate(self.net, outcome, self.rng)
        if role == "scratch":
            self.scratch_net = None
            self.scratch_rng = None
        self.state = None
        self.stage_rows = []
        self.stage_index += 1

    def advance(self, max_generations: Optional[int] = None) -> bool:
        """Run up to ``max_generations`` tournaments (all remaining if None); True once finished."""
        left = max_generations
        while not self.done:
            if self.state is None:
                if left == 0:
                    break
                self._begin()
            iteration, role, budget = self.current_stage()
            n = budget - self.state.tournaments_completed
            if left is not None:
                n = min(n, left)
            net, task = self._stage_objects()
            _, rows = evolve(net, task, self.params, self.state, n, self.hooks,
                             phase=role, iteration=iteration, seed=self.seed)
            self.stage_rows.extend(rows)
            self.metrics.extend(rows)
            self.generations_run += n
            if left is not None:
                left -= n
            if self.state.tournaments_completed >= budget:
                self._finish()
            elif left == 0:
                break
        return self.done

    def report(self) -> ExperimentReport:
        if not self.done:
            raise RuntimeError("experiment has not finished")
        by_key = {(o.iteration, o.role): o for o in self.outcomes}
        iterations = [IterationResult(it, by_key[(it, "source")], by_key[(it, "destination")],
                                      by_key.get((it, "scratch")))
                      for it in range(1, self.plan.iterations + 1)]
        return ExperimentReport(self.source_task.task_id, self.dest_task.task_id, self.seed,
                                iterations, list(self.metrics), sn.frozen_modules(self.net))


def run_transfer_experiment(plan: TransferPlan, source_task: TaskSpec, dest_task: TaskSpec,
                            params: EvolutionParams, seed: int,
                            arch: Optional[Architecture] = None) -> ExperimentReport:
    """Source stage, consolidate, destination stage, consolidate; per iteration.

    ``dest_task`` may be ``source_task`` itself for within-dataset accumulation.
    """
    if arch is None:
        arch = Architecture(input_dim=source_task.dim)
    run = TransferRun(plan, source_task, dest_task, arch, params, seed)
    run.advance()
    return run.report()
