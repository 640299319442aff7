"""Force-distribution and total-force error metrics, per axis, in Newtons.

Labels are axis-interleaved, so the components of axis ``a`` are the stride
slice ``a::3``. The sparse RMSE only looks at components whose ground truth is
non-zero and is absent for an axis without any.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ..domain import AXES, AxisTriple
from ..errors import InputError, PairingError
from ..labeling.agreement import FtReading
from .dataset import Dataset
from .mlp import MlpParameters, Mode, forward
from .training import Standardizer


@dataclass(frozen=True)
class EvalReport:
    count: int
    rmse: AxisTriple
    rmses: tuple[float | None, float | None, float | None]
    rmset_fem: AxisTriple
    rmset_ft: AxisTriple | None = None

    def to_data(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "rmse_n": self.rmse.to_data(),
            "rmses_n": dict(zip(AXES, self.rmses)),
            "rmset_fem_n": self.rmset_fem.to_data(),
            "rmset_ft_n": self.rmset_ft.to_data() if self.rmset_ft else None,
        }


def evaluate(
    params: MlpParameters,
    testset: Dataset,
    ft_readings: Sequence[FtReading] | None = None,
    standardizer: Standardizer | None = None,
) -> EvalReport:
    if len(testset) == 0:
        raise InputError("cannot evaluate on an empty test set")
    features = testset.features
    if standardizer is not None:
        features = standardizer.apply(features)
    predictions = forward(params, features, Mode.EVAL)
    return evaluate_predictions(predictions, testset.labels, testset.ids, ft_readings)


def evaluate_predictions(
    predictions: np.ndarray,
    labels: np.ndarray,
    ids: Sequence[str] | None = None,
    ft_readings: Sequence[FtReading] | None = None,
) -> EvalReport:
    pred = np.atleast_2d(np.asarray(predictions, dtype=float))
    truth = np.atleast_2d(np.asarray(labels, dtype=float))
    if pred.shape != truth.shape:
        raise InputError(f"prediction shape {pred.shape} differs from label shape {truth.shape}")
    if pred.shape[0] == 0 or pred.shape[1] % 3:
        raise InputError("evaluation needs at least one record of 3n label components")

    rmse, rmses, rmset = [], [], []
    for axis in range(3):
        p, y = pred[:, axis::3], truth[:, axis::3]
        rmse.append(_rms(p - y))
        support = y != 0.0
        rmses.append(_rms((p - y)[support]) if support.any() else None)
        rmset.append(_rms(p.sum(axis=1) - y.sum(axis=1)))

    rmset_ft = None
    if ft_readings is not None:
        if ids is None:
            raise InputError("sensor comparison needs the record indentation ids")
        rmset_ft = _rmset_ft(pred, list(ids), ft_readings)
    return EvalReport(
        count=pred.shape[0],
        rmse=AxisTriple.of(rmse),
        rmses=(rmses[0], rmses[1], rmses[2]),
        rmset_fem=AxisTriple.of(rmset),
        rmset_ft=rmset_ft,
    )


def _rms(values: np.ndarray) -> float:
    flat = np.ravel(values)
    return math.sqrt(math.fsum((flat * flat).tolist()) / flat.size)


def _rmset_ft(pred: np.ndarray, ids: list[str], readings: Sequence[FtReading]) -> AxisTriple:
    by_id = {reading.indentation_id: reading for reading in readings}
    missing = [key for key in ids if key not in by_id]
    if missing:
        raise PairingError(missing, "indentation ids without sensor readings")
    totals = np.column_stack([pred[:, axis::3].sum(axis=1) for axis in range(3)])
    sensor = np.array([by_id[key].total.as_tuple() for key in ids])
    return AxisTriple.of(_rms(totals[:, axis] - sensor[:, axis]) for axis in range(3))
