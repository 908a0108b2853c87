from __future__ import annotations

import json
from typing import Optional

from ..supernet import to_text
from ..transfer import ExperimentReport, StageOutcome
from .atomic import atomic_write_text

BUDGET_NOTE = ("Each stage runs for a fixed number of generations (one generation = one "
               "two-path tournament); this generation budget stands in for a fixed "
               "wall-clock training period.")


def _delta(a: float, b: Optional[float]) -> Optional[float]:
    return None if b is None else a - b


def report_summary(report: ExperimentReport) -> dict:
    """Per-iteration transfer vs scratch table plus the best iteration by transfer accuracy."""
    rows = []
    for it in report.iterations:
        rows.append({
            "iteration": it.iteration,
            "transfer_acc": it.transfer_acc,
            "scratch_acc": it.scratch_acc,
            "transfer_loss": it.transfer_loss,
            "scratch_loss": it.scratch_loss,
            "delta_acc": _delta(it.transfer_acc, it.scratch_acc),
            "source_acc": it.source.final_eval_accuracy,
            "source_loss": it.source.final_train_loss,
            "source_best_path": to_text(it.source.best_genotype),
            "destination_best_path": to_text(it.destination.best_genotype),
        })
    best = max(rows, key=lambda r: (r["transfer_acc"], -r["iteration"]))["iteration"] if rows else None
    return {
        "source_task": report.source_task,
        "destination_task": report.destination_task,
        "seed": report.seed,
        "iterations": rows,
        "best_iteration": best,
        "frozen_modules": [list(p) for p in report.frozen_modules],
        "budget_note": BUDGET_NOTE,
    }


def stage_summary(outcome: StageOutcome, seed: int) -> dict:
    return {
        "task_id": outcome.task_id,
        "role": outcome.role,
        "seed": seed,
        "best_path": to_text(outcome.best_genotype),
        "best_fitness": outcome.best_fitness,
        "eval_accuracy": outcome.final_eval_accuracy,
        "train_loss": outcome.final_train_loss,
        "budget_note": BUDGET_NOTE,
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(doc: dict, path) -> None:
    atomic_write_text(path, dumps(doc))
