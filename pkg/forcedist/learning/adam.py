from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError
from .mlp import MlpParameters


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if not (math.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ConfigurationError("learning rate must be finite and >= 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigurationError("Adam betas must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ConfigurationError("Adam epsilon must be positive")


@dataclass(frozen=True, eq=False)
class AdamState:
    step: int
    first: tuple[np.ndarray, ...]
    second: tuple[np.ndarray, ...]

    @classmethod
    def fresh(cls, params: MlpParameters) -> "AdamState":
        zeros = tuple(np.zeros_like(a) for a in params.arrays)
        return cls(step=0, first=zeros, second=tuple(z.copy() for z in zeros))


def adam_step(
    params: MlpParameters,
    state: AdamState,
    gradients: Sequence[np.ndarray],
    config: AdamConfig,
) -> tuple[MlpParameters, AdamState]:
    """One bias-corrected Adam update; returns new parameters and state."""
    arrays = params.arrays
    if len(gradients) != len(arrays):
        raise ConfigurationError("one gradient array per parameter array is required")
    t = state.step + 1
    first_correction = 1.0 - config.beta1**t
    second_correction = 1.0 - config.beta2**t
    updated, first, second = [], [], []
    for value, grad, m, v in zip(arrays, gradients, state.first, state.second):
        m = config.beta1 * m + (1.0 - config.beta1) * grad
        v = config.beta2 * v + (1.0 - config.beta2) * grad * grad
        step = (m / first_correction) / (np.sqrt(v / second_correction) + config.epsilon)
        updated.append(value - config.learning_rate * step)
        first.append(m)
        second.append(v)
    return MlpParameters.from_arrays(updated), AdamState(t, tuple(first), tuple(second))
