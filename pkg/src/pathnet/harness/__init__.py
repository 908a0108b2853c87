"""Configuration, metrics logging, checkpoints, plotting and the CLI."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, ExperimentConfig, build_tasks, config_from_dict, load_config
from .metrics_io import read_metrics_csv, write_metrics_csv
from .plotting import render_curves
from .report import report_summary
