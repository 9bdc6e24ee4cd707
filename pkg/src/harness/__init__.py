"""
Harness Module

Experiment configuration, dataset splits, checkpoints, the training loop,
end-to-end runs and the cross-model comparison.
"""
from .config import ExperimentConfig, build_experiment_config, load_experiment_config, load_raw_config
from .splits import random_split, split, time_split
from .checkpoint import (
    Checkpoint, CheckpointManager, load_checkpoint, load_model, restore_model, save_checkpoint,
)
from .trainer import EpochStats, Trainer
from .experiment import (
    ExperimentData, RunManifest, build_model, evaluate_model, load_run_model, prepare_data, run_experiment,
    train_model,
)
from .compare import CLAIMS, Claim, Comparison, compare, print_comparison, report_frame
from .benchmark import experiment_files, run_benchmark

__all__ = [
    "ExperimentConfig", "build_experiment_config", "load_experiment_config", "load_raw_config",
    "random_split", "split", "time_split",
    "Checkpoint", "CheckpointManager", "load_checkpoint", "load_model", "restore_model", "save_checkpoint",
    "EpochStats", "Trainer",
    "ExperimentData", "RunManifest", "build_model", "evaluate_model", "load_run_model", "prepare_data",
    "run_experiment", "train_model",
    "CLAIMS", "Claim", "Comparison", "compare", "print_comparison", "report_frame",
    "experiment_files", "run_benchmark",
]
