"""JSON checkpoints of a :class:`~pathnet.transfer.TransferRun`.

Floats are written with ``repr`` (shortest string that round-trips to the
same 64-bit value), so parameters, RNG states and metrics reload bitwise.
Datasets are not stored; they are rebuilt from the embedded config and
checked against stored SHA-256 fingerprints.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Optional

import numpy as np

from ..evolution import EvolutionState
from ..metrics import MetricsRecord
from ..supernet import Architecture, ReadoutHead, SuperNetwork, from_text, to_text
from ..transfer import StageOutcome, TransferRun
from .atomic import atomic_write_text
from .config import ExperimentConfig, build_tasks, config_from_dict

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


def _array(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def _unarray(d: dict, dtype=np.float64) -> np.ndarray:
    return np.asarray(d["data"], dtype=dtype).reshape(d["shape"])


def net_to_dict(net: SuperNetwork) -> dict:
    return {
        "architecture": asdict(net.arch),
        "weights": [_array(w) for w in net.weights],
        "biases": [_array(b) for b in net.biases],
        "frozen": net.frozen.astype(int).tolist(),
        "heads": [{"task_id": h.task_id, "W": _array(h.W), "b": _array(h.b)}
                  for h in net.heads.values()],
    }


def net_from_dict(d: dict) -> SuperNetwork:
    arch = Architecture(**d["architecture"])
    net = SuperNetwork(arch, [_unarray(w) for w in d["weights"]], [_unarray(b) for b in d["biases"]],
                       np.asarray(d["frozen"], dtype=bool).reshape(arch.num_layers, arch.modules_per_layer))
    for h in d["heads"]:
        net.heads[h["task_id"]] = ReadoutHead(h["task_id"], _unarray(h["W"]), _unarray(h["b"]))
    M, n = arch.modules_per_layer, arch.neurons_per_module
    for layer in range(arch.num_layers):
        if net.weights[layer].shape != (M, arch.layer_input_dim(layer), n):
            raise CheckpointError(f"layer {layer} weights have shape {net.weights[layer].shape}")
    return net


def _record(r: MetricsRecord) -> list:
    return [r.phase, r.iteration, r.generation, r.path_index, r.genotype, r.fitness,
            r.mean_train_loss, r.eval_accuracy, r.wallclock_ms, r.seed]


def _outcome(o: StageOutcome) -> dict:
    return {"task_id": o.task_id, "role": o.role, "iteration": o.iteration,
            "best_genotype": to_text(o.best_genotype), "best_fitness": o.best_fitness,
            "final_eval_accuracy": o.final_eval_accuracy, "final_train_loss": o.final_train_loss,
            "metrics": [_record(r) for r in o.metrics]}


def _unoutcome(d: dict) -> StageOutcome:
    return StageOutcome(d["task_id"], d["role"], d["iteration"], from_text(d["best_genotype"]),
                        d["best_fitness"], d["final_eval_accuracy"], d["final_train_loss"],
                        [MetricsRecord(*r) for r in d["metrics"]])


def checkpoint_to_dict(run: TransferRun, config: ExperimentConfig) -> dict:
    state = None
    if run.state is not None:
        s = run.state
        state = {
            "rng": "scratch" if s.rng is run.scratch_rng else "transfer",
            "population": [to_text(g) for g in s.population],
            "tournaments_completed": s.tournaments_completed,
            "evaluations_completed": s.evaluations_completed,
            "best_seen": None if s.best_seen is None else [to_text(s.best_seen[0]), s.best_seen[1]],
        }
    return {
        "format_version": FORMAT_VERSION,
        "config": config.to_dict(),
        "base_dir": str(Path(config.base_dir).resolve()),
        "fingerprints": {"source": run.source_task.train.fingerprint() + run.source_task.eval.fingerprint(),
                         "destination": run.dest_task.train.fingerprint() + run.dest_task.eval.fingerprint()},
        "seed": run.seed,
        "stage_index": run.stage_index,
        "generations_run": run.generations_run,
        "rng_state": run.rng.bit_generator.state,
        "scratch_rng_state": None if run.scratch_rng is None else run.scratch_rng.bit_generator.state,
        "network": net_to_dict(run.net),
        "scratch_network": None if run.scratch_net is None else net_to_dict(run.scratch_net),
        "evolution_state": state,
        "stage_rows": [_record(r) for r in run.stage_rows],
        "outcomes": [_outcome(o) for o in run.outcomes],
        "best_genotypes": {f"{o.role}{o.iteration}": to_text(o.best_genotype) for o in run.outcomes},
        "metrics": [_record(r) for r in run.metrics],
    }


def save_checkpoint(run: TransferRun, config: ExperimentConfig, path) -> None:
    atomic_write_text(path, json.dumps(checkpoint_to_dict(run, config), allow_nan=False))


def _set_state(rng: np.random.Generator, state: dict) -> np.random.Generator:
    rng.bit_generator.state = state
    return rng


def checkpoint_from_dict(d: dict, base_dir: str = ".") -> tuple[TransferRun, ExperimentConfig]:
    if not isinstance(d, dict) or "format_version" not in d:
        raise CheckpointError("not a checkpoint: missing format_version")
    if d["format_version"] != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint format_version {d['format_version']!r} is not supported (expected {FORMAT_VERSION})")
    try:
        config = config_from_dict(d["config"], base_dir=base_dir)
        source, dest = build_tasks(config)
        fp = d["fingerprints"]
        if fp["source"] != source.train.fingerprint() + source.eval.fingerprint() or \
                fp["destination"] != dest.train.fingerprint() + dest.eval.fingerprint():
            raise CheckpointError("datasets rebuilt from the config do not match the checkpoint")
        arch = config.architecture_for(source.dim)
        run = TransferRun(config.transfer_plan(), source, dest, arch, config.evolution, d["seed"])
        run.net = net_from_dict(d["network"])
        _set_state(run.rng, d["rng_state"])
        if d["scratch_rng_state"] is not None:
            run.scratch_rng = _set_state(np.random.Generator(np.random.PCG64()), d["scratch_rng_state"])
        if d["scratch_network"] is not None:
            run.scratch_net = net_from_dict(d["scratch_network"])
        run.stage_index = d["stage_index"]
        run.generations_run = d["generations_run"]
        run.stage_rows = [MetricsRecord(*r) for r in d["stage_rows"]]
        run.outcomes = [_unoutcome(o) for o in d["outcomes"]]
        run.metrics = [MetricsRecord(*r) for r in d["metrics"]]
        s = d["evolution_state"]
        if s is not None:
            rng = run.scratch_rng if s["rng"] == "scratch" else run.rng
            if rng is None:
                raise CheckpointError("evolution state refers to a missing scratch stream")
            best = None if s["best_seen"] is None else (from_text(s["best_seen"][0]), s["best_seen"][1])
            run.state = EvolutionState([from_text(g) for g in s["population"]], rng,
                                       s["tournaments_completed"], s["evaluations_completed"], best)
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CheckpointError(f"corrupted checkpoint: {type(exc).__name__}: {exc}") from None
    return run, config


def load_checkpoint(path) -> tuple[TransferRun, ExperimentConfig]:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint ({exc.strerror or exc})") from None
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: corrupted checkpoint, invalid JSON at line {exc.lineno}") from None
    base: Optional[str] = d.get("base_dir") if isinstance(d, dict) else None
    return checkpoint_from_dict(d, base_dir=base or ".")
