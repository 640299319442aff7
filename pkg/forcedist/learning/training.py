"""Mini-batch Adam training of the force-distribution network."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..domain import require_int
from ..errors import ConfigurationError, InputError
from ..log import logger
from ..seeds import stage_rng
from .adam import AdamConfig, AdamState, adam_step
from .dataset import Dataset
from .mlp import MlpParameters, Mode, forward, init_xavier, loss_and_gradients, mse_loss


@dataclass(frozen=True)
class TrainConfig:
    hidden: tuple[int, ...] = (800, 600, 400)
    learning_rate: float = 1e-4
    batch_size: int = 400
    dropout: float = 0.1
    epochs: int = 200
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    test_fraction: float = 0.2
    standardize: bool = False
    log_every: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(self.hidden))
        for size in self.hidden:
            require_int(size, "hidden layer size", minimum=1)
        require_int(self.batch_size, "batch size", minimum=1)
        require_int(self.epochs, "epochs", minimum=0)
        require_int(self.seed, "seed")
        require_int(self.log_every, "log interval", minimum=1)
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must lie in [0, 1), got {self.dropout}")
        if not 0.0 <= self.test_fraction < 1.0:
            raise ConfigurationError(f"test fraction must lie in [0, 1), got {self.test_fraction}")
        AdamConfig(self.learning_rate, self.beta1, self.beta2, self.epsilon)

    @property
    def adam(self) -> AdamConfig:
        return AdamConfig(self.learning_rate, self.beta1, self.beta2, self.epsilon)

    def to_data(self) -> dict[str, Any]:
        return {
            "hidden": list(self.hidden),
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "dropout": self.dropout,
            "epochs": self.epochs,
            "seed": self.seed,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "test_fraction": self.test_fraction,
            "standardize": self.standardize,
        }

    @classmethod
    def from_data(cls, data: dict[str, Any]) -> "TrainConfig":
        known = {name for name in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown train settings: {', '.join(unknown)}")
        values = dict(data)
        if "hidden" in values:
            values["hidden"] = tuple(values["hidden"])
        return cls(**values)


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature affine map fitted on the training split."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def identity(cls, width: int) -> "Standardizer":
        return cls(np.zeros(width), np.ones(width))

    @classmethod
    def fit(cls, features: np.ndarray) -> "Standardizer":
        mean = features.mean(axis=0)
        scale = features.std(axis=0)
        return cls(mean, np.where(scale > 0.0, scale, 1.0))

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.mean) / self.scale

    def to_data(self) -> dict[str, list[float]]:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_data(cls, data: dict[str, Any]) -> "Standardizer":
        return cls(np.asarray(data["mean"], dtype=float), np.asarray(data["scale"], dtype=float))


@dataclass(frozen=True, eq=False)
class TrainResult:
    params: MlpParameters
    standardizer: Standardizer
    train_loss: tuple[float, ...]
    test_loss: tuple[float, ...]
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    config: TrainConfig = field(default_factory=TrainConfig)


def layer_sizes(dataset: Dataset, config: TrainConfig) -> tuple[int, ...]:
    return (2 * dataset.m, *config.hidden, 3 * dataset.n)


def initial_parameters(dataset: Dataset, config: TrainConfig) -> MlpParameters:
    return init_xavier(layer_sizes(dataset, config), stage_rng(config.seed, "train.init"))


def split(dataset: Dataset, config: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    """Seeded record-level shuffle, then the leading share becomes the test set."""
    order = stage_rng(config.seed, "train.split").permutation(len(dataset))
    test_count = int(round(config.test_fraction * len(dataset)))
    test_count = min(test_count, len(dataset) - 1)
    return np.sort(order[test_count:]), np.sort(order[:test_count])


def train(dataset: Dataset, config: TrainConfig | None = None) -> TrainResult:
    config = config or TrainConfig()
    if len(dataset) == 0:
        raise InputError("cannot train on an empty dataset")
    train_idx, test_idx = split(dataset, config)
    x_train, y_train = dataset.features[train_idx], dataset.labels[train_idx]
    x_test, y_test = dataset.features[test_idx], dataset.labels[test_idx]

    standardizer = (
        Standardizer.fit(x_train) if config.standardize else Standardizer.identity(x_train.shape[1])
    )
    x_train = standardizer.apply(x_train)
    x_test = standardizer.apply(x_test)

    params = initial_parameters(dataset, config)
    state = AdamState.fresh(params)
    adam = config.adam
    batch_rng = stage_rng(config.seed, "train.batches")
    dropout_rng = stage_rng(config.seed, "train.dropout")
    batch = min(config.batch_size, len(train_idx))
    steps = math.ceil(len(train_idx) / batch)

    train_loss: list[float] = []
    test_loss: list[float] = []
    for epoch in range(1, config.epochs + 1):
        order = batch_rng.permutation(len(train_idx))
        for step in range(steps):
            chosen = order[step * batch : (step + 1) * batch]
            _, grads = loss_and_gradients(
                params, x_train[chosen], y_train[chosen], dropout_rng, dropout=config.dropout
            )
            params, state = adam_step(params, state, grads, adam)
        train_loss.append(mse_loss(forward(params, x_train, Mode.EVAL), y_train))
        if len(test_idx):
            test_loss.append(mse_loss(forward(params, x_test, Mode.EVAL), y_test))
        if epoch % config.log_every == 0 or epoch == config.epochs:
            tail = f", test MSE {test_loss[-1]:.6g}" if test_loss else ""
            logger.info(f"epoch {epoch}/{config.epochs}: train MSE {train_loss[-1]:.6g}{tail}")

    ids = dataset.ids
    return TrainResult(
        params=params,
        standardizer=standardizer,
        train_loss=tuple(train_loss),
        test_loss=tuple(test_loss),
        train_ids=tuple(ids[i] for i in train_idx),
        test_ids=tuple(ids[i] for i in test_idx),
        config=config,
    )
