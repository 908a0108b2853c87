"""Pathway evolution over a modular supernetwork, with freeze-and-reevolve transfer."""

from .evolution import EvolutionParams, EvolutionState, evolve, microbial_tournament
from .metrics import MetricsRecord
from .supernet import Architecture, Genotype, SuperNetwork, init_supernet, register_head
from .tasks import Dataset, TaskSpec, derive_related_task, make_blobs, make_task, split
from .transfer import (ExperimentReport, TransferPlan, TransferRun, consolidate,
                       run_stage, run_transfer_experiment)

__version__ = "0.1.0"
