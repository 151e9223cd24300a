"""
Harness layer for MultiRep.

Run configuration, the episode model, Adam training with validation-based
checkpoint selection, evaluation, experiment drivers and the gradient
check suite.
"""

from multirep.harness.config import DataConfig, OptimizerConfig, RunConfig, flatten_config
from multirep.harness.data import RunData, carve_validation, load_data
from multirep.harness.evaluation import GRID_CELLS, GRID_COLUMNS, evaluate, evaluate_grid, evaluate_seed
from multirep.harness.experiments import (
    ABLATION_ARMS,
    ABLATION_COLUMNS,
    ARMS,
    PREDICTION_COLUMNS,
    SWEEP_COLUMNS,
    ablate,
    arm_config,
    export_embeddings,
    export_predictions,
    sample_support,
    sweep_m,
    train_and_evaluate,
)
from multirep.harness.gradcheck import (
    check_encoder,
    check_ops,
    check_total_loss,
    run_gradcheck,
    toy_episode,
)
from multirep.harness.hooks import FunctionHook, HookManager, HookType, IHook, JsonLinesHook
from multirep.harness.metrics import JsonLinesWriter, Metrics, mean_std, read_csv, read_json_lines, write_csv
from multirep.harness.model import EpisodeResult, MultiRepModel
from multirep.harness.optim import Adam
from multirep.harness.trainer import TrainingEvent, TrainResult, Trainer, train

__all__ = [
    # Configuration
    "RunConfig",
    "OptimizerConfig",
    "DataConfig",
    "flatten_config",
    # Data
    "RunData",
    "load_data",
    "carve_validation",
    # Model and training
    "MultiRepModel",
    "EpisodeResult",
    "Adam",
    "Trainer",
    "TrainResult",
    "TrainingEvent",
    "train",
    # Evaluation
    "GRID_CELLS",
    "GRID_COLUMNS",
    "evaluate",
    "evaluate_seed",
    "evaluate_grid",
    # Experiments
    "ARMS",
    "ABLATION_ARMS",
    "ABLATION_COLUMNS",
    "SWEEP_COLUMNS",
    "PREDICTION_COLUMNS",
    "arm_config",
    "ablate",
    "sweep_m",
    "train_and_evaluate",
    "sample_support",
    "export_embeddings",
    "export_predictions",
    # Hooks
    "HookManager",
    "HookType",
    "IHook",
    "FunctionHook",
    "JsonLinesHook",
    # Gradient checking
    "run_gradcheck",
    "check_ops",
    "check_encoder",
    "check_total_loss",
    "toy_episode",
    # Metrics
    "Metrics",
    "JsonLinesWriter",
    "mean_std",
    "write_csv",
    "read_csv",
    "read_json_lines",
]
