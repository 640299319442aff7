"""Total-force agreement between FEM labels and force/torque sensor readings."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ..domain import AXES, AxisTriple, require_positive, require_text
from ..errors import InputError, PairingError, SchemaError
from .binning import ForceDistributionLabel, total_force


@dataclass(frozen=True)
class FtReading:
    indentation_id: str
    total: AxisTriple
    resolution: AxisTriple

    def __post_init__(self) -> None:
        object.__setattr__(self, "indentation_id", require_text(self.indentation_id, "indentation id"))
        resolution = AxisTriple.of(
            require_positive(v, f"{axis} resolution")
            for axis, v in zip(AXES, self.resolution.as_tuple())
        )
        object.__setattr__(self, "resolution", resolution)


@dataclass(frozen=True)
class AgreementReport:
    count: int
    rmse_gt: AxisTriple
    resolution: AxisTriple

    @property
    def within_resolution(self) -> dict[str, bool]:
        return {
            axis: error <= limit
            for axis, error, limit in zip(AXES, self.rmse_gt.as_tuple(), self.resolution.as_tuple())
        }

    def to_data(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "rmse_gt_n": self.rmse_gt.to_data(),
            "resolution_n": self.resolution.to_data(),
            "within_resolution": self.within_resolution,
        }


def ground_truth_rmse(
    labels: Sequence[ForceDistributionLabel], readings: Sequence[FtReading]
) -> AxisTriple:
    """Per-axis RMSE between label totals and sensor totals over paired indentations."""
    pairs = _pair(labels, readings)
    if not pairs:
        return AxisTriple(0.0, 0.0, 0.0)
    squared = [[], [], []]
    for label, reading in pairs:
        fem = total_force(label).as_tuple()
        for axis, (a, b) in enumerate(zip(fem, reading.total.as_tuple())):
            squared[axis].append((a - b) ** 2)
    return AxisTriple.of(math.sqrt(math.fsum(values) / len(pairs)) for values in squared)


def agreement_report(
    labels: Sequence[ForceDistributionLabel], readings: Sequence[FtReading]
) -> AgreementReport:
    if not readings:
        raise InputError("agreement report needs at least one sensor reading")
    rmse = ground_truth_rmse(labels, readings)
    resolution = AxisTriple.of(
        max(reading.resolution.as_tuple()[k] for reading in readings) for k in range(3)
    )
    return AgreementReport(count=len(readings), rmse_gt=rmse, resolution=resolution)


def synthetic_readings(
    labels: Sequence[ForceDistributionLabel],
    resolution: AxisTriple,
    rng: np.random.Generator,
) -> list[FtReading]:
    """Label totals perturbed by Gaussian noise with one resolution step as sigma."""
    readings = []
    sigma = np.array(resolution.as_tuple())
    for label in sorted(labels, key=lambda item: item.indentation_id):
        noise = rng.standard_normal(3) * sigma
        total = np.array(total_force(label).as_tuple()) + noise
        readings.append(FtReading(label.indentation_id, AxisTriple.of(total.tolist()), resolution))
    return readings


def _pair(
    labels: Sequence[ForceDistributionLabel], readings: Sequence[FtReading]
) -> list[tuple[ForceDistributionLabel, FtReading]]:
    for kind, ids in (
        ("label", [label.indentation_id for label in labels]),
        ("reading", [reading.indentation_id for reading in readings]),
    ):
        duplicates = sorted(key for key, count in Counter(ids).items() if count > 1)
        if duplicates:
            raise SchemaError(f"duplicate {kind} indentation ids: {', '.join(duplicates[:10])}")
    by_label = {label.indentation_id: label for label in labels}
    by_reading = {reading.indentation_id: reading for reading in readings}
    offenders = set(by_label) ^ set(by_reading)
    if offenders:
        raise PairingError(offenders)
    return [(by_label[key], by_reading[key]) for key in sorted(by_label)]
