"""JSON experiment configuration with field-level validation.

Example (every block optional; defaults reproduce the original PathNet
settings: 3 layers of 20 modules x 20 neurons, paths of width <= 5, a
population of 20 evolved for 1000 generations, lr 0.02 on 50 batches of 16
per epoch, 50 epochs per path evaluation)::

    {
      "seed": 0,
      "architecture": {"num_layers": 3, "modules_per_layer": 20},
      "evolution": {"population_size": 20, "generations": 1000},
      "tasks": {
        "eval_fraction": 0.2,
        "source": {"id": "A", "kind": "blobs", "classes": 6, "dim": 100,
                   "per_class": 100, "spread": 0.2, "seed": 1},
        "destination": {"id": "B", "kind": "derived", "transform": "fixed-rotation", "seed": 2}
      },
      "plan": {"iterations": 4, "scratch_baseline": true}
    }

Task kinds: ``blobs`` (synthetic), ``csv`` (``path``, ``label_column``,
``header``), ``derived`` (a related task built from the source dataset) and
``same`` (destination reuses the source task).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .. import tasks as tk
from ..evolution import EvolutionParams
from ..supernet import Architecture, ArchitectureError
from ..transfer import TransferPlan


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class ArchitectureConfig:
    num_layers: int = 3
    modules_per_layer: int = 20
    neurons_per_module: int = 20
    max_path_width: int = 5
    input_dim: Optional[int] = None  # taken from the source data when None


@dataclass(frozen=True)
class PlanConfig:
    iterations: int = 4
    source_budget: Optional[int] = None       # defaults to evolution.generations
    destination_budget: Optional[int] = None
    scratch_baseline: bool = True
    consolidate_destination: bool = True


DEFAULT_SOURCE = {"id": "A", "kind": "blobs", "classes": 6, "dim": 100,
                  "per_class": 100, "spread": 0.2, "seed": 1}
DEFAULT_DESTINATION = {"id": "B", "kind": "derived", "transform": "fixed-rotation", "seed": 2}

TASK_KEYS = {
    "blobs": {"id", "kind", "classes", "dim", "per_class", "spread", "seed"},
    "csv": {"id", "kind", "path", "label_column", "header"},
    "derived": {"id", "kind", "transform", "seed", "subset_size"},
    "same": {"kind"},
}


@dataclass(frozen=True)
class TasksConfig:
    eval_fraction: float = 0.2
    split_seed: int = 0
    source: dict = field(default_factory=lambda: dict(DEFAULT_SOURCE))
    destination: dict = field(default_factory=lambda: dict(DEFAULT_DESTINATION))


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    architecture: ArchitectureConfig = ArchitectureConfig()
    evolution: EvolutionParams = EvolutionParams()
    tasks: TasksConfig = TasksConfig()
    plan: PlanConfig = PlanConfig()
    log_wallclock: bool = False
    base_dir: str = "."  # relative CSV paths resolve here; not serialized

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, seed=int(seed))

    def transfer_plan(self) -> TransferPlan:
        g = self.evolution.generations
        p = self.plan
        return TransferPlan(p.iterations, p.source_budget or g, p.destination_budget or g,
                            p.scratch_baseline, p.consolidate_destination)

    def architecture_for(self, input_dim: int) -> Architecture:
        a = self.architecture
        return Architecture(a.num_layers, a.modules_per_layer, a.neurons_per_module,
                            a.max_path_width, a.input_dim or input_dim)


def _block(cls, raw: Any, where: str, problems: list[str]):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        problems.append(f"{where}: expected an object")
        return cls()
    names = {f.name for f in dataclasses.fields(cls)}
    for key in sorted(set(raw) - names):
        problems.append(f"{where}.{key}: unknown field")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in raw:
            continue
        value = raw[f.name]
        want = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
        if "bool" in want:
            ok = isinstance(value, bool)
        elif "int" in want and "float" not in want:
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif "float" in want:
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        else:
            ok = True
        if "Optional" in want and value is None:
            ok = True
        if not ok:
            problems.append(f"{where}.{f.name}: expected {want}, got {value!r}")
            continue
        kwargs[f.name] = value
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        for part in str(exc).split("; "):
            problems.append(f"{where}: {part}")
        return cls()


def _check_task(raw: Any, where: str, problems: list[str], allow_source_refs: bool) -> None:
    if not isinstance(raw, dict):
        problems.append(f"{where}: expected an object")
        return
    kind = raw.get("kind")
    allowed = ("blobs", "csv", "derived", "same") if allow_source_refs else ("blobs", "csv")
    if kind not in allowed:
        problems.append(f"{where}.kind: expected one of {list(allowed)}, got {kind!r}")
        return
    for key in sorted(set(raw) - TASK_KEYS[kind]):
        problems.append(f"{where}.{key}: unknown field for kind {kind!r}")
    if kind == "csv" and not isinstance(raw.get("path"), str):
        problems.append(f"{where}.path: required string for kind 'csv'")
    if kind == "derived" and raw.get("transform") not in tk.RELATED_KINDS:
        problems.append(f"{where}.transform: expected one of {list(tk.RELATED_KINDS)}, "
                        f"got {raw.get('transform')!r}")
    if kind == "blobs":
        for key, lo in (("classes", 2), ("dim", 1), ("per_class", 1)):
            v = raw.get(key, DEFAULT_SOURCE[key])
            if not isinstance(v, int) or isinstance(v, bool) or v < lo:
                problems.append(f"{where}.{key}: expected an integer >= {lo}, got {v!r}")
        v = raw.get("spread", DEFAULT_SOURCE["spread"])
        if not isinstance(v, (int, float)) or isinstance(v, bool) or v < 0:
            problems.append(f"{where}.spread: expected a number >= 0, got {v!r}")


def config_from_dict(raw: Any, base_dir: str = ".") -> ExperimentConfig:
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    known = {"seed", "architecture", "evolution", "tasks", "plan", "log_wallclock"}
    for key in sorted(set(raw) - known):
        problems.append(f"{key}: unknown field")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append(f"seed: expected a non-negative integer, got {seed!r}")
        seed = 0
    log_wallclock = raw.get("log_wallclock", False)
    if not isinstance(log_wallclock, bool):
        problems.append(f"log_wallclock: expected true/false, got {log_wallclock!r}")
        log_wallclock = False
    arch = _block(ArchitectureConfig, raw.get("architecture"), "architecture", problems)
    evo = _block(EvolutionParams, raw.get("evolution"), "evolution", problems)
    plan = _block(PlanConfig, raw.get("plan"), "plan", problems)
    tasks_raw = raw.get("tasks")
    tasks = _block(TasksConfig, tasks_raw, "tasks", problems)
    if isinstance(tasks_raw, dict):
        if not 0.0 < tasks.eval_fraction < 1.0:
            problems.append(f"tasks.eval_fraction: expected a value in (0, 1), got {tasks.eval_fraction}")
        _check_task(tasks.source, "tasks.source", problems, allow_source_refs=False)
        _check_task(tasks.destination, "tasks.destination", problems, allow_source_refs=True)
    try:
        Architecture(arch.num_layers, arch.modules_per_layer, arch.neurons_per_module,
                     arch.max_path_width, arch.input_dim or 1)
    except ArchitectureError as exc:
        problems.extend(f"architecture: {p}" for p in str(exc).split("; "))
    for name in ("iterations", "source_budget", "destination_budget"):
        v = getattr(plan, name)
        if v is not None and v < 1:
            problems.append(f"plan.{name}: must be >= 1, got {v}")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(seed, arch, evo, tasks, plan, log_wallclock, str(base_dir))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config file ({exc.strerror or exc})"]) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    return config_from_dict(raw, base_dir=str(path.parent))


def _source_dataset(spec: dict, base_dir: str) -> tuple[tk.Dataset, str]:
    if spec.get("kind", "blobs") == "csv":
        path = Path(spec["path"])
        if not path.is_absolute():
            path = Path(base_dir) / path
        ds = tk.load_csv(path, spec.get("label_column", -1), spec.get("header", False))
        return ds, f"csv {path}"
    s = {**DEFAULT_SOURCE, **spec}
    ds = tk.make_blobs(s["classes"], s["dim"], s["per_class"], s["spread"], s["seed"],
                       name=s["id"])
    return ds, (f"blobs classes={s['classes']} dim={s['dim']} per_class={s['per_class']} "
                f"spread={s['spread']} seed={s['seed']}")


def build_tasks(config: ExperimentConfig) -> tuple[tk.TaskSpec, tk.TaskSpec]:
    """Materialize (source, destination) tasks; deterministic in the config."""
    tc = config.tasks
    src_spec = tc.source
    src_ds, src_prov = _source_dataset(src_spec, config.base_dir)
    src_id = src_spec.get("id", "A")
    source = tk.make_task(src_id, src_ds, tc.eval_fraction, tc.split_seed, src_prov)
    dst_spec = tc.destination
    kind = dst_spec.get("kind")
    if kind == "same":
        return source, source
    dst_id = dst_spec.get("id", "B")
    if kind == "derived":
        dst_ds = tk.derive_related_task(src_ds, dst_spec["transform"], dst_spec.get("seed", 0),
                                        subset_size=dst_spec.get("subset_size"), name=dst_id)
        prov = f"{dst_spec['transform']} of {src_id}, seed {dst_spec.get('seed', 0)}"
    else:
        dst_ds, prov = _source_dataset(dst_spec, config.base_dir)
    if dst_ds.dim != src_ds.dim:
        raise ConfigError([f"tasks.destination: feature dim {dst_ds.dim} differs from source dim {src_ds.dim}"])
    dest = tk.make_task(dst_id, dst_ds, tc.eval_fraction, tc.split_seed + 1, prov)
    if dest.task_id == source.task_id:
        raise ConfigError(["tasks.destination.id: must differ from the source id (use kind 'same' to reuse)"])
    return source, dest
