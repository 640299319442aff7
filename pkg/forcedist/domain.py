from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable

import numpy as np

from .errors import InputError, ParameterDomainError


SCHEMA_VERSION = 1
AXES = ("x", "y", "z")


class LoadCase(Enum):
    UA = "UA"
    PS = "PS"
    EB = "EB"

    @classmethod
    def parse(cls, value: "LoadCase | str") -> "LoadCase":
        if isinstance(value, cls):
            return value
        text = str(value).strip().upper()
        try:
            return cls(text)
        except ValueError as exc:
            expected = ", ".join(case.value for case in cls)
            raise InputError(
                f"unsupported load case [{value}], expected one of: {expected}"
            ) from exc


class CurveSource(Enum):
    EXPERIMENT = "experiment"
    MODEL = "model"


@dataclass(frozen=True)
class AxisTriple:
    x: float
    y: float
    z: float

    @classmethod
    def of(cls, values: Iterable[float]) -> "AxisTriple":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def to_data(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "z": self.z}


@dataclass(frozen=True)
class StressStretchCurve:
    case: LoadCase
    lambdas: tuple[float, ...]
    sigmas_kpa: tuple[float, ...]
    source: CurveSource = CurveSource.EXPERIMENT
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "case", LoadCase.parse(self.case))
        object.__setattr__(self, "source", CurveSource(self.source))
        lambdas = tuple(float(x) for x in self.lambdas)
        sigmas = tuple(float(x) for x in self.sigmas_kpa)
        if len(lambdas) == 0:
            raise InputError("curve must contain at least one sample")
        if len(lambdas) != len(sigmas):
            raise InputError("curve stretch and stress counts differ")
        if not all(math.isfinite(v) for v in (*lambdas, *sigmas)):
            raise InputError("curve samples must be finite")
        if lambdas[0] < 1.0:
            raise InputError(f"first curve stretch must be >= 1, got {lambdas[0]}")
        if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
            raise InputError("curve stretches must be strictly increasing")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "sigmas_kpa", sigmas)

    def __len__(self) -> int:
        return len(self.lambdas)

    @property
    def lambda_array(self) -> np.ndarray:
        return np.asarray(self.lambdas, dtype=float)

    @property
    def sigma_array(self) -> np.ndarray:
        return np.asarray(self.sigmas_kpa, dtype=float)

    def to_data(self) -> dict[str, Any]:
        return {
            "case": self.case.value,
            "source": self.source.value,
            "label": self.label,
            "lambdas": list(self.lambdas),
            "sigmas_kpa": list(self.sigmas_kpa),
        }


def require_positive(value: float, label: str) -> float:
    number = require_finite(value, label)
    if number <= 0:
        raise ParameterDomainError(f"{label} must be positive, got {number}")
    return number


def require_finite(value: Any, label: str) -> float:
    if isinstance(value, bool):
        raise ParameterDomainError(f"{label} must be a number")
    try:
        number = float(value)
    except (TypeError, ValueError) as exc:
        raise ParameterDomainError(f"{label} must be a number") from exc
    if not math.isfinite(number):
        raise ParameterDomainError(f"{label} must be finite")
    return number


def require_int(value: Any, label: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InputError(f"{label} must be an integer")
    number = int(value)
    if minimum is not None and number < minimum:
        raise InputError(f"{label} must be >= {minimum}")
    return number


def require_text(value: Any, label: str) -> str:
    text = str(value).strip()
    if len(text) == 0:
        raise InputError(f"{label} cannot be empty")
    return text
