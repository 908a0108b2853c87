"""Command line entry point.

    pathnet run --config exp.json --out results/ [--seed N] [--stop-after G]
    pathnet resume --checkpoint results/checkpoint.json --out results/
    pathnet evolve --config exp.json --out stage/ [--task source|destination]
    pathnet plot --metrics results/metrics.csv --out curves.svg [--metric loss]
    pathnet validate-config --config exp.json
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .. import supernet as sn
from ..tensorcore import make_rng
from ..transfer import TransferRun, run_stage
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, ExperimentConfig, build_tasks, load_config
from .metrics_io import MetricsParseError, read_metrics_csv, write_metrics_csv
from .plotting import render_curves
from .report import report_summary, stage_summary, write_json

log = logging.getLogger("pathnet")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _write_outputs(run: TransferRun, config: ExperimentConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(run.metrics, out / "metrics.csv", config.log_wallclock)
    save_checkpoint(run, config, out / "checkpoint.json")
    if run.done:
        write_json(report_summary(run.report()), out / "report.json")
    if any(not r.is_summary for r in run.metrics):
        render_curves(run.metrics, out / "curves_accuracy.svg", "fitness")
        render_curves(run.metrics, out / "curves_loss.svg", "loss")


def _advance(run: TransferRun, config: ExperimentConfig, out: Path, stop_after) -> int:
    run.advance(stop_after)
    _write_outputs(run, config, out)
    if run.done:
        print(f"finished {run.generations_run} generations; results in {out}")
    else:
        print(f"stopped after {run.generations_run} generations; resume from {out / 'checkpoint.json'}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    source, dest = build_tasks(config)
    run = TransferRun(config.transfer_plan(), source, dest, config.architecture_for(source.dim),
                      config.evolution, config.seed)
    return _advance(run, config, Path(args.out), args.stop_after)


def cmd_resume(args) -> int:
    run, config = load_checkpoint(args.checkpoint)
    return _advance(run, config, Path(args.out), args.stop_after)


def cmd_evolve(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    source, dest = build_tasks(config)
    task = source if args.task == "source" else dest
    rng = make_rng(np.random.SeedSequence(config.seed))
    net = sn.init_supernet(config.architecture_for(task.dim), rng)
    budget = args.generations or config.evolution.generations
    _, _, outcome = run_stage(net, task, config.evolution, budget, rng,
                              role="source" if args.task == "source" else "destination",
                              seed=config.seed)
    out = Path(args.out)
    write_metrics_csv(outcome.metrics, out / "metrics.csv", config.log_wallclock)
    write_json(stage_summary(outcome, config.seed), out / "report.json")
    render_curves(outcome.metrics, out / "curves_accuracy.svg", "fitness")
    render_curves(outcome.metrics, out / "curves_loss.svg", "loss")
    print(f"best path {sn.to_text(outcome.best_genotype)}: eval accuracy "
          f"{outcome.final_eval_accuracy:.4f}; results in {out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    rows = read_metrics_csv(args.metrics)
    if not any(not r.is_summary for r in rows):
        print(f"error: {args.metrics} has no path-evaluation rows to plot", file=sys.stderr)
        return EXIT_FAIL
    render_curves(rows, args.out, args.metric)
    return EXIT_OK


def cmd_validate(args) -> int:
    config = load_config(args.config)
    source, dest = build_tasks(config)
    arch = config.architecture_for(source.dim)
    plan = config.transfer_plan()
    print(f"ok: {arch.num_layers}x{arch.modules_per_layer} modules of {arch.neurons_per_module}, "
          f"input_dim {arch.input_dim}; {plan.iterations} iterations; "
          f"source {source.task_id} ({len(source.train)}/{len(source.eval)} rows, "
          f"{source.num_classes} classes) -> destination {dest.task_id}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathnet", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full transfer experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--stop-after", type=int, help="stop (and checkpoint) after this many generations")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue a run from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stop-after", type=int)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("evolve", help="single evolution stage on a fresh network")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--task", choices=("source", "destination"), default="source")
    p.add_argument("--generations", type=int)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("plot", help="render learning curves from a metrics CSV")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metric", choices=("fitness", "loss"), default="fitness")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("validate-config", help="check a config file and its datasets")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CheckpointError, MetricsParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
