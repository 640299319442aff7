"""Fully connected network: sigmoid hidden layers, identity output.

Weights are stored as (fan_in, fan_out) matrices so a batch of row vectors
propagates as ``a @ W + b``. Dropout is inverted: kept activations are scaled
by 1 / (1 - rate) during training and nothing changes at evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import expit

from ..domain import require_int
from ..errors import ConfigurationError, InputError


class Mode(Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass(frozen=True, eq=False)
class MlpParameters:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        weights = tuple(np.array(w, dtype=float) for w in self.weights)
        biases = tuple(np.array(b, dtype=float).ravel() for b in self.biases)
        if len(weights) == 0 or len(weights) != len(biases):
            raise ConfigurationError("network needs one bias vector per weight matrix")
        for k, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or w.shape[1] != b.size:
                raise ConfigurationError(f"layer {k} weight/bias shapes disagree")
            if k > 0 and weights[k - 1].shape[1] != w.shape[0]:
                raise ConfigurationError(f"layer {k} input size does not match layer {k - 1}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ConfigurationError(f"layer {k} holds non-finite values")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @classmethod
    def zeros(cls, sizes: Sequence[int]) -> "MlpParameters":
        sizes = _check_sizes(sizes)
        return cls(
            weights=tuple(np.zeros((a, b)) for a, b in zip(sizes, sizes[1:])),
            biases=tuple(np.zeros(b) for b in sizes[1:]),
        )

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    @property
    def arrays(self) -> list[np.ndarray]:
        """Weights and biases interleaved layer by layer."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "MlpParameters":
        return cls(weights=tuple(arrays[0::2]), biases=tuple(arrays[1::2]))

    def parameter_count(self) -> int:
        return sum(a.size for a in self.arrays)

    def equals(self, other: "MlpParameters") -> bool:
        return self.sizes == other.sizes and all(
            np.array_equal(a, b) for a, b in zip(self.arrays, other.arrays)
        )


@dataclass(frozen=True)
class ForwardTrace:
    """Layer inputs and dropout masks of one forward pass, reused by backward."""

    inputs: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]
    masks: tuple[np.ndarray | None, ...]
    output: np.ndarray


def init_xavier(sizes: Sequence[int], rng: np.random.Generator) -> MlpParameters:
    sizes = _check_sizes(sizes)
    weights = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
    return MlpParameters(tuple(weights), tuple(np.zeros(size) for size in sizes[1:]))


def forward(
    params: MlpParameters,
    features: np.ndarray,
    mode: Mode = Mode.EVAL,
    rng: np.random.Generator | None = None,
    *,
    dropout: float = 0.0,
) -> np.ndarray:
    single = np.ndim(features) == 1
    trace = forward_trace(params, np.atleast_2d(features), mode, rng, dropout=dropout)
    return trace.output[0] if single else trace.output


def forward_trace(
    params: MlpParameters,
    features: np.ndarray,
    mode: Mode = Mode.EVAL,
    rng: np.random.Generator | None = None,
    *,
    dropout: float = 0.0,
) -> ForwardTrace:
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.sizes[0]:
        raise ConfigurationError(
            f"network expects {params.sizes[0]} features per record, got shape {x.shape}"
        )
    rate = _check_dropout(dropout)
    masking = mode is Mode.TRAIN and rate > 0.0
    if masking and rng is None:
        raise InputError("train-mode dropout needs a random generator")

    inputs, activations, masks = [], [], []
    a = x
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(a)
        z = a @ w + b
        if k == last:
            return ForwardTrace(tuple(inputs), tuple(activations), tuple(masks), z)
        h = expit(z)
        activations.append(h)
        if masking:
            mask = (rng.random(h.shape) >= rate) / (1.0 - rate)
            masks.append(mask)
            a = h * mask
        else:
            masks.append(None)
            a = h
    raise AssertionError("unreachable")


def mse_loss(pred: np.ndarray, label: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    label = np.asarray(label, dtype=float)
    if pred.shape != label.shape:
        raise InputError(f"prediction shape {pred.shape} differs from label shape {label.shape}")
    return float(np.mean((pred - label) ** 2))


def backward(params: MlpParameters, trace: ForwardTrace, labels: np.ndarray) -> list[np.ndarray]:
    """Gradients of the batch-mean MSE, in the order of ``MlpParameters.arrays``."""
    y = np.asarray(labels, dtype=float)
    if y.shape != trace.output.shape:
        raise InputError(f"label shape {y.shape} differs from output shape {trace.output.shape}")
    delta = 2.0 * (trace.output - y) / y.size
    grads: list[np.ndarray] = [np.empty(0)] * (2 * len(params.weights))
    for k in range(len(params.weights) - 1, -1, -1):
        grads[2 * k] = trace.inputs[k].T @ delta
        grads[2 * k + 1] = delta.sum(axis=0)
        if k == 0:
            break
        delta = delta @ params.weights[k].T
        mask = trace.masks[k - 1]
        if mask is not None:
            delta = delta * mask
        h = trace.activations[k - 1]
        delta = delta * h * (1.0 - h)
    return grads


def loss_and_gradients(
    params: MlpParameters,
    features: np.ndarray,
    labels: np.ndarray,
    rng: np.random.Generator | None = None,
    *,
    dropout: float = 0.0,
) -> tuple[float, list[np.ndarray]]:
    mode = Mode.TRAIN if dropout > 0.0 else Mode.EVAL
    trace = forward_trace(params, features, mode, rng, dropout=dropout)
    return mse_loss(trace.output, labels), backward(params, trace, labels)


def gradient_check(
    params: MlpParameters, features: np.ndarray, labels: np.ndarray, h: float = 1e-6
) -> float:
    """Largest norm-relative gap between backprop and central differences, per array."""
    _, analytic = loss_and_gradients(params, features, labels)
    arrays = [a.copy() for a in params.arrays]
    worst = 0.0
    for index, array in enumerate(arrays):
        numeric = np.zeros_like(array)
        for position in np.ndindex(array.shape):
            original = array[position]
            array[position] = original + h
            plus = mse_loss(forward(MlpParameters.from_arrays(arrays), features), labels)
            array[position] = original - h
            minus = mse_loss(forward(MlpParameters.from_arrays(arrays), features), labels)
            array[position] = original
            numeric[position] = (plus - minus) / (2.0 * h)
        scale = np.linalg.norm(analytic[index]) + np.linalg.norm(numeric)
        if scale > 0.0:
            worst = max(worst, float(np.linalg.norm(analytic[index] - numeric) / scale))
    return worst


def _check_sizes(sizes: Sequence[int]) -> tuple[int, ...]:
    sizes = tuple(require_int(size, "layer size", minimum=1) for size in sizes)
    if len(sizes) < 2:
        raise ConfigurationError("network needs at least an input and an output layer")
    return sizes


def _check_dropout(rate: float) -> float:
    rate = float(rate)
    if not 0.0 <= rate < 1.0:
        raise ConfigurationError(f"dropout rate must lie in [0, 1), got {rate}")
    return rate
