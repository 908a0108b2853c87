"""Metrics CSV with a fixed header; floats are written in shortest round-trip form."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Optional

from ..metrics import PHASES, MetricsRecord
from ..supernet import GenotypeError, from_text
from .atomic import atomic_write_text

HEADER = ["phase", "iteration", "generation", "path_index", "genotype", "fitness",
          "mean_train_loss", "eval_accuracy", "wallclock_ms", "seed"]


class MetricsParseError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"metrics line {line}: {message}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metrics_to_csv(rows: Iterable[MetricsRecord], include_wallclock: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([r.phase, r.iteration, r.generation, _fmt(r.path_index), r.genotype,
                    _fmt(r.fitness), _fmt(r.mean_train_loss), _fmt(r.eval_accuracy),
                    _fmt(r.wallclock_ms if include_wallclock else None), r.seed])
    return buf.getvalue()


def write_metrics_csv(rows: Iterable[MetricsRecord], path, include_wallclock: bool = False) -> None:
    """Write the log; wall-clock cells stay empty unless asked for, keeping files reproducible."""
    atomic_write_text(path, metrics_to_csv(rows, include_wallclock))


def _opt(cell: str, cast):
    return None if cell == "" else cast(cell)


def parse_metrics_csv(text: str) -> list[MetricsRecord]:
    reader = csv.reader(io.StringIO(text))
    rows = []
    header = next(reader, None)
    if header != HEADER:
        raise MetricsParseError(1, f"expected header {','.join(HEADER)}")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(HEADER):
            raise MetricsParseError(lineno, f"expected {len(HEADER)} fields, found {len(row)}")
        try:
            phase = row[0]
            if phase not in PHASES:
                raise ValueError(f"unknown phase {phase!r}")
            from_text(row[4])
            rec = MetricsRecord(phase, int(row[1]), int(row[2]), _opt(row[3], int), row[4],
                                float(row[5]), float(row[6]), _opt(row[7], float),
                                _opt(row[8], float), int(row[9]))
        except (ValueError, GenotypeError) as exc:
            raise MetricsParseError(lineno, str(exc)) from None
        rows.append(rec)
    return rows


def read_metrics_csv(path) -> list[MetricsRecord]:
    return parse_metrics_csv(Path(path).read_text())
