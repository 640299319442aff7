from .adam import AdamConfig, AdamState, adam_step
from .checkpoint import TrainedModel, load_model, predict, save_model
from .dataset import Dataset, DatasetRecord, read_dataset, write_dataset
from .metrics import EvalReport, evaluate, evaluate_predictions
from .mlp import (
    MlpParameters,
    Mode,
    backward,
    forward,
    gradient_check,
    init_xavier,
    mse_loss,
)
from .training import Standardizer, TrainConfig, TrainResult, split, train

__all__ = [
    "AdamConfig",
    "AdamState",
    "Dataset",
    "DatasetRecord",
    "EvalReport",
    "MlpParameters",
    "Mode",
    "Standardizer",
    "TrainConfig",
    "TrainResult",
    "TrainedModel",
    "adam_step",
    "backward",
    "evaluate",
    "evaluate_predictions",
    "forward",
    "gradient_check",
    "init_xavier",
    "load_model",
    "mse_loss",
    "predict",
    "read_dataset",
    "save_model",
    "split",
    "train",
    "write_dataset",
]
