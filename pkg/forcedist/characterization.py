"""Experimental stress analysis for UA/PS tension and EB membrane inflation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .constitutive import OgdenParameters, load_case_sigma
from .domain import (
    CurveSource,
    LoadCase,
    StressStretchCurve,
    require_finite,
    require_positive,
)
from .errors import CsvFormatError, DegenerateGeometryError, InputError, ParameterDomainError
from .log import logger
from .storage import csv_float, read_csv_rows, write_csv

N_PER_MM2_TO_KPA = 1000.0
THIN_MEMBRANE_RATIO = 0.1
NORMAL_EQUATION_CONDITION_LIMIT = 1e8
CURVE_DIGITS = 9

TENSION_COLUMNS = ("lambda", "force_n", "w0_mm", "h0_mm")
INFLATION_COLUMNS = ("pressure_kpa", "radius_mm", "h0_mm", "lambda1", "lambda2")
CURVE_COLUMNS = ("lambda", "sigma_kpa")


@dataclass(frozen=True)
class TensionRecord:
    force_n: float
    stretch: float
    w0_mm: float
    h0_mm: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "force_n", require_finite(self.force_n, "force"))
        object.__setattr__(self, "stretch", require_positive(self.stretch, "stretch"))
        object.__setattr__(self, "w0_mm", require_positive(self.w0_mm, "w0"))
        object.__setattr__(self, "h0_mm", require_positive(self.h0_mm, "h0"))


@dataclass(frozen=True)
class InflationRecord:
    pressure_kpa: float
    radius_mm: float
    h0_mm: float
    lambda1: float
    lambda2: float

    def __post_init__(self) -> None:
        pressure = require_finite(self.pressure_kpa, "pressure")
        if pressure < 0:
            raise ParameterDomainError(f"pressure must be >= 0, got {pressure}")
        object.__setattr__(self, "pressure_kpa", pressure)
        object.__setattr__(self, "radius_mm", require_positive(self.radius_mm, "radius"))
        object.__setattr__(self, "h0_mm", require_positive(self.h0_mm, "h0"))
        object.__setattr__(self, "lambda1", require_positive(self.lambda1, "lambda1"))
        object.__setattr__(self, "lambda2", require_positive(self.lambda2, "lambda2"))

    @property
    def is_thin_membrane(self) -> bool:
        return self.h0_mm / self.radius_mm < THIN_MEMBRANE_RATIO


@dataclass(frozen=True)
class InflationStress:
    sigma_kpa: float
    lambda3: float
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class FrictionMeasurement:
    theta_rad: float
    mu0: float


@dataclass(frozen=True)
class TrackedPointPair:
    ref: tuple[float, float]
    cur: tuple[float, float]

    def __post_init__(self) -> None:
        ref = tuple(require_finite(v, "reference coordinate") for v in self.ref)
        cur = tuple(require_finite(v, "current coordinate") for v in self.cur)
        if len(ref) != 2 or len(cur) != 2:
            raise InputError("tracked points must be 2D")
        object.__setattr__(self, "ref", ref)
        object.__setattr__(self, "cur", cur)


def tension_stress(record: TensionRecord) -> float:
    return record.force_n * record.stretch / (record.w0_mm * record.h0_mm) * N_PER_MM2_TO_KPA


def thickness_stretch(lambda1: float, lambda2: float) -> float:
    l1 = require_positive(lambda1, "lambda1")
    l2 = require_positive(lambda2, "lambda2")
    return 1.0 / (l1 * l2)


def inflation_stress(record: InflationRecord) -> InflationStress:
    lambda3 = thickness_stretch(record.lambda1, record.lambda2)
    sigma = record.pressure_kpa * record.radius_mm / (2.0 * record.h0_mm * lambda3)
    warnings: tuple[str, ...] = ()
    if not record.is_thin_membrane:
        message = (
            f"thin-membrane approximation violated: h0/r = "
            f"{record.h0_mm / record.radius_mm:.3g} >= {THIN_MEMBRANE_RATIO}"
        )
        logger.warning(message)
        warnings = (message,)
    return InflationStress(sigma_kpa=sigma, lambda3=lambda3, warnings=warnings)


def friction_from_tilt(theta_rad: float) -> FrictionMeasurement:
    theta = require_finite(theta_rad, "tilt angle")
    if not 0.0 < theta < math.pi / 2:
        raise ParameterDomainError(f"tilt angle must lie in (0, pi/2) rad, got {theta}")
    return FrictionMeasurement(theta_rad=theta, mu0=math.tan(theta))


def principal_stretches_from_points(pairs: Sequence[TrackedPointPair]) -> tuple[float, float]:
    """Principal in-plane stretches of the best-fit affine map ref -> cur."""
    if len(pairs) < 3:
        raise DegenerateGeometryError("stretch estimation needs at least 3 tracked points")
    ref = np.array([pair.ref for pair in pairs], dtype=float)
    cur = np.array([pair.cur for pair in pairs], dtype=float)
    # centering removes the translation from the least-squares problem
    ref_c = ref - ref.mean(axis=0)
    cur_c = cur - cur.mean(axis=0)
    normal = ref_c.T @ ref_c
    if np.linalg.cond(normal) > NORMAL_EQUATION_CONDITION_LIMIT:
        raise DegenerateGeometryError("tracked reference points are collinear or coincident")
    gradient = np.linalg.solve(normal, ref_c.T @ cur_c).T
    singular = np.linalg.svd(gradient, compute_uv=False)
    return (float(singular[0]), float(singular[1]))


def curve_from_tension(
    records: Sequence[TensionRecord], case: LoadCase | str, *, label: str = ""
) -> StressStretchCurve:
    load_case = LoadCase.parse(case)
    if load_case is LoadCase.EB:
        raise InputError("tension records describe UA or PS tests, not EB")
    ordered = sorted(records, key=lambda r: r.stretch)
    return StressStretchCurve(
        case=load_case,
        lambdas=tuple(r.stretch for r in ordered),
        sigmas_kpa=tuple(tension_stress(r) for r in ordered),
        source=CurveSource.EXPERIMENT,
        label=label,
    )


def curve_from_inflation(
    records: Sequence[InflationRecord], *, label: str = ""
) -> StressStretchCurve:
    ordered = sorted(records, key=lambda r: r.lambda1)
    return StressStretchCurve(
        case=LoadCase.EB,
        lambdas=tuple(r.lambda1 for r in ordered),
        sigmas_kpa=tuple(inflation_stress(r).sigma_kpa for r in ordered),
        source=CurveSource.EXPERIMENT,
        label=label,
    )


def average_specimens(curves: Sequence[StressStretchCurve]) -> StressStretchCurve:
    if len(curves) == 0:
        raise InputError("no specimen curves to average")
    case = curves[0].case
    if any(curve.case is not case for curve in curves):
        raise InputError("specimen curves must share one load case")
    upper = min(curve.lambdas[-1] for curve in curves)
    lower = max(curve.lambdas[0] for curve in curves)
    grid = curves[0].lambda_array
    grid = grid[(grid >= lower) & (grid <= upper)]
    if grid.size == 0:
        raise InputError("specimen curves share no common stretch range")
    stacked = np.vstack(
        [np.interp(grid, curve.lambda_array, curve.sigma_array) for curve in curves]
    )
    return StressStretchCurve(
        case=case,
        lambdas=tuple(grid.tolist()),
        sigmas_kpa=tuple(stacked.mean(axis=0).tolist()),
        source=CurveSource.EXPERIMENT,
        label="average",
    )


def synthetic_curve(
    params: OgdenParameters,
    case: LoadCase | str,
    stretches: ArrayLike,
    *,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> StressStretchCurve:
    lam = np.asarray(stretches, dtype=float)
    sigma = load_case_sigma(params, case, lam)
    if noise > 0:
        if rng is None:
            raise InputError("noisy synthetic curves need a seeded generator")
        sigma = sigma * (1.0 + noise * rng.standard_normal(sigma.shape))
    return StressStretchCurve(
        case=LoadCase.parse(case),
        lambdas=tuple(lam.tolist()),
        sigmas_kpa=tuple(sigma.tolist()),
        source=CurveSource.EXPERIMENT if noise > 0 else CurveSource.MODEL,
        label=f"synthetic-{LoadCase.parse(case).value}",
    )


def read_tension_csv(path: Path) -> list[TensionRecord]:
    records: list[TensionRecord] = []
    for number, row in read_csv_rows(path, TENSION_COLUMNS):
        values = {column: csv_float(path, number, row, column) for column in TENSION_COLUMNS}
        try:
            records.append(
                TensionRecord(
                    force_n=values["force_n"],
                    stretch=values["lambda"],
                    w0_mm=values["w0_mm"],
                    h0_mm=values["h0_mm"],
                )
            )
        except ParameterDomainError as exc:
            raise CsvFormatError(path, str(exc), row=number) from exc
    return records


def read_inflation_csv(path: Path) -> list[InflationRecord]:
    records: list[InflationRecord] = []
    for number, row in read_csv_rows(path, INFLATION_COLUMNS):
        values = {column: csv_float(path, number, row, column) for column in INFLATION_COLUMNS}
        try:
            records.append(InflationRecord(**values))
        except ParameterDomainError as exc:
            raise CsvFormatError(path, str(exc), row=number) from exc
    return records


def read_curve_csv(
    path: Path, case: LoadCase | str, source: CurveSource = CurveSource.EXPERIMENT
) -> StressStretchCurve:
    rows = read_csv_rows(path, CURVE_COLUMNS)
    if not rows:
        raise CsvFormatError(path, "curve file has no samples")
    lambdas = [csv_float(path, number, row, "lambda") for number, row in rows]
    sigmas = [csv_float(path, number, row, "sigma_kpa") for number, row in rows]
    try:
        return StressStretchCurve(
            case=case,
            lambdas=tuple(lambdas),
            sigmas_kpa=tuple(sigmas),
            source=source,
            label=Path(path).stem,
        )
    except InputError as exc:
        raise CsvFormatError(path, str(exc)) from exc


def write_curve_csv(curve: StressStretchCurve, path: Path) -> Path:
    rows = (
        (f"{lam:.{CURVE_DIGITS}g}", f"{sigma:.{CURVE_DIGITS}g}")
        for lam, sigma in zip(curve.lambdas, curve.sigmas_kpa)
    )
    return write_csv(path, CURVE_COLUMNS, rows)
