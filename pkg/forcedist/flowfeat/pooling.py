"""Region pooling of a flow field into (magnitude, direction) features."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..domain import require_int
from ..errors import ConfigurationError, InputError
from .dis import FlowField

DIRECTION_EPSILON = 1e-9


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Region-major (magnitude [px], direction [rad]) pairs, length 2m."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).ravel()
        if values.size == 0 or values.size % 2:
            raise InputError(f"feature vector needs an even, non-zero length, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise InputError("feature vector must be finite")
        if np.any(values[0::2] < 0):
            raise InputError("feature magnitudes must be >= 0")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_vectors(cls, mean_u: np.ndarray, mean_v: np.ndarray) -> "FeatureVector":
        mean_u = np.ravel(mean_u)
        mean_v = np.ravel(mean_v)
        magnitude = np.hypot(mean_u, mean_v)
        direction = np.arctan2(mean_v, mean_u)
        direction = np.where(direction <= -math.pi, math.pi, direction)
        direction = np.where(magnitude < DIRECTION_EPSILON, 0.0, direction)
        values = np.empty(2 * magnitude.size)
        values[0::2] = magnitude
        values[1::2] = direction
        return cls(values)

    @property
    def m(self) -> int:
        return self.values.size // 2

    @property
    def magnitudes(self) -> np.ndarray:
        return self.values[0::2]

    @property
    def directions(self) -> np.ndarray:
        return self.values[1::2]

    def mean_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        return self.magnitudes * np.cos(self.directions), self.magnitudes * np.sin(self.directions)


def pool_features(flow: FlowField, rows: int, cols: int) -> FeatureVector:
    """Average the flow vector over a rows x cols tiling, row-major over regions."""
    require_int(rows, "region rows", minimum=1)
    require_int(cols, "region cols", minimum=1)
    if flow.height % rows or flow.width % cols:
        raise ConfigurationError(
            f"{rows}x{cols} regions do not tile a {flow.width}x{flow.height} px frame"
        )
    shape = (rows, flow.height // rows, cols, flow.width // cols)
    mean_u = flow.u.reshape(shape).mean(axis=(1, 3))
    mean_v = flow.v.reshape(shape).mean(axis=(1, 3))
    return FeatureVector.from_vectors(mean_u, mean_v)


def average_features(vectors: Sequence[FeatureVector]) -> FeatureVector:
    """Average repeated captures region by region as mean vectors."""
    if len(vectors) == 0:
        raise InputError("no feature vectors to average")
    if len({vector.m for vector in vectors}) != 1:
        raise InputError("feature vectors must share one region count")
    components = [vector.mean_vectors() for vector in vectors]
    mean_u = np.mean([u for u, _ in components], axis=0)
    mean_v = np.mean([v for _, v in components], axis=0)
    return FeatureVector.from_vectors(mean_u, mean_v)
