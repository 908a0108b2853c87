"""One row of the learning-curve log."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

PHASES = ("source", "destination", "scratch")


@dataclass(frozen=True)
class MetricsRecord:
    """A path evaluation (``path_index`` 0 or 1) or a stage summary (``path_index`` None).

    Summary rows carry the best genotype, its fitness, its final training
    loss and the end-of-stage eval accuracy; ``generation`` is then the
    number of tournaments run in the stage.
    """

    phase: str
    iteration: int
    generation: int
    path_index: Optional[int]
    genotype: str
    fitness: float
    mean_train_loss: float
    eval_accuracy: Optional[float] = None
    wallclock_ms: Optional[float] = None
    seed: int = 0

    @property
    def is_summary(self) -> bool:
        return self.path_index is None

    def without_timing(self) -> "MetricsRecord":
        return replace(self, wallclock_ms=None)
