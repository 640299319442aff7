"""Constrained least-squares identification of Ogden parameters.

Each term is searched as (sign, log mu, log alpha) with mu = s*exp(.) and
alpha = s*exp(.), so mu*alpha > 0 holds for every point the optimizer visits.
Starts cycle through all sign patterns; each start runs Nelder-Mead and then
a finite-difference least-squares polish.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize

from .constitutive import (
    PRODUCT_TOLERANCE,
    OgdenParameters,
    OgdenTerm,
    closed_form_sigma,
    load_case_sigma,
)
from .domain import CurveSource, StressStretchCurve, require_int
from .errors import InputError, OptimizationError
from .log import logger

SUPPORTED_ORDERS = (1, 2, 3)
TIE_TOLERANCE = 1e-12
GRADIENT_STEP = 1e-6
PENALTY_RESIDUAL = 1e100


@dataclass(frozen=True)
class FitProblem:
    curves: tuple[StressStretchCurve, ...]
    order: int = 2
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        curves = tuple(self.curves)
        if len(curves) == 0:
            raise InputError("fit problem needs at least one curve")
        object.__setattr__(self, "curves", curves)
        order = require_int(self.order, "order")
        if order not in SUPPORTED_ORDERS:
            raise InputError(f"model order must be one of 1, 2, 3, got {order}")
        if self.weights is not None:
            weights = tuple(float(w) for w in self.weights)
            if len(weights) != len(curves):
                raise InputError("one weight per curve is required")
            if any(not math.isfinite(w) or w < 0 for w in weights):
                raise InputError("curve weights must be finite and non-negative")
            object.__setattr__(self, "weights", weights)

    @property
    def curve_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.curves))
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True)
class FitConfig:
    starts: int = 32
    seed: int = 0
    max_iters: int = 2000
    tol: float = 1e-10
    threads: int = 1
    mu_range: tuple[float, float] = (0.1, 100.0)
    alpha_range: tuple[float, float] = (0.5, 10.0)
    polish_rounds: int = 5

    def __post_init__(self) -> None:
        require_int(self.starts, "starts", minimum=1)
        require_int(self.max_iters, "max_iters", minimum=1)
        require_int(self.threads, "threads", minimum=1)
        require_int(self.polish_rounds, "polish_rounds", minimum=1)
        if not self.tol > 0:
            raise InputError("tol must be positive")
        for label, (low, high) in (("mu_range", self.mu_range), ("alpha_range", self.alpha_range)):
            if not 0 < low < high:
                raise InputError(f"{label} must satisfy 0 < low < high")


@dataclass(frozen=True)
class FitResult:
    params: OgdenParameters
    objective: float
    per_curve_rms: tuple[float, ...]
    iterations: int
    converged: bool
    starts_used: int
    diagnostics: tuple[dict[str, Any], ...] = field(default=(), compare=False)

    def to_data(self) -> dict[str, Any]:
        return {
            "params": self.params.to_data(),
            "objective_kpa2": self.objective,
            "per_curve_rms_kpa": list(self.per_curve_rms),
            "iterations": self.iterations,
            "converged": self.converged,
            "starts_used": self.starts_used,
        }


@dataclass(frozen=True)
class _StartOutcome:
    index: int
    signs: tuple[float, ...]
    initial_objective: float
    x: np.ndarray
    objective: float
    iterations: int
    converged: bool

    @property
    def finite(self) -> bool:
        return math.isfinite(self.objective)

    def diagnostics(self) -> dict[str, Any]:
        return {
            "start": self.index,
            "signs": list(self.signs),
            "initial_objective": self.initial_objective,
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
        }


class _SignedLogModel:
    def __init__(self, problem: FitProblem, signs: tuple[float, ...]):
        self.problem = problem
        self.signs = np.asarray(signs, dtype=float)
        self.order = len(signs)
        self.sqrt_weights = np.sqrt(problem.curve_weights)

    def decode(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        with np.errstate(over="ignore"):
            mus = self.signs * np.exp(x[: self.order])
            alphas = self.signs * np.exp(x[self.order :])
        return mus, alphas

    def residuals(self, x: np.ndarray) -> np.ndarray:
        residual = self._residuals(x)
        if residual is None:
            size = sum(len(curve) for curve in self.problem.curves)
            return np.full(size, PENALTY_RESIDUAL)
        return residual

    def objective(self, x: np.ndarray) -> float:
        residual = self._residuals(x)
        if residual is None:
            return math.inf
        return float(residual @ residual)

    def _residuals(self, x: np.ndarray) -> np.ndarray | None:
        mus, alphas = self.decode(x)
        if not (np.all(np.isfinite(mus)) and np.all(np.isfinite(alphas))):
            return None
        # constraint guard: points violating mu*alpha > 0 are rejected, never evaluated
        if np.any(mus * alphas <= PRODUCT_TOLERANCE):
            return None
        parts = []
        with np.errstate(over="ignore", invalid="ignore"):
            for curve, scale in zip(self.problem.curves, self.sqrt_weights):
                model = closed_form_sigma(mus, alphas, curve.case, curve.lambda_array)
                parts.append(scale * (model - curve.sigma_array))
        stacked = np.concatenate(parts)
        if not np.all(np.isfinite(stacked)):
            return None
        return stacked

    def params(self, x: np.ndarray) -> OgdenParameters:
        mus, alphas = self.decode(x)
        return OgdenParameters.from_arrays(mus, alphas)


def objective(params: OgdenParameters, problem: FitProblem) -> float:
    total = 0.0
    for curve, weight in zip(problem.curves, problem.curve_weights):
        residual = load_case_sigma(params, curve.case, curve.lambda_array) - curve.sigma_array
        total += float(weight) * float(residual @ residual)
    return total


def model_curves(params: OgdenParameters, problem: FitProblem) -> list[StressStretchCurve]:
    return [
        StressStretchCurve(
            case=curve.case,
            lambdas=curve.lambdas,
            sigmas_kpa=tuple(load_case_sigma(params, curve.case, curve.lambda_array).tolist()),
            source=CurveSource.MODEL,
            label=curve.label,
        )
        for curve in problem.curves
    ]


def per_curve_rms(params: OgdenParameters, problem: FitProblem) -> tuple[float, ...]:
    values = []
    for curve in problem.curves:
        residual = load_case_sigma(params, curve.case, curve.lambda_array) - curve.sigma_array
        values.append(float(np.sqrt(np.mean(residual**2))))
    return tuple(values)


def sign_pattern(index: int, order: int) -> tuple[float, ...]:
    return tuple(-1.0 if (index >> k) & 1 else 1.0 for k in range(order))


def initial_points(problem: FitProblem, config: FitConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    order = problem.order
    log_mu = rng.uniform(
        math.log(config.mu_range[0]), math.log(config.mu_range[1]), (config.starts, order)
    )
    log_alpha = rng.uniform(
        math.log(config.alpha_range[0]), math.log(config.alpha_range[1]), (config.starts, order)
    )
    return np.hstack([log_mu, log_alpha])


def fit(problem: FitProblem, config: FitConfig | None = None) -> FitResult:
    config = config or FitConfig()
    starts = initial_points(problem, config)
    jobs = [(index, sign_pattern(index, problem.order), starts[index]) for index in range(config.starts)]

    def run(job: tuple[int, tuple[float, ...], np.ndarray]) -> _StartOutcome:
        index, signs, x0 = job
        return _run_start(problem, config, index, signs, x0)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    diagnostics = [outcome.diagnostics() for outcome in outcomes]
    finite = [outcome for outcome in outcomes if outcome.finite]
    if not finite:
        raise OptimizationError("all fit starts diverged", diagnostics)

    best = _select(finite, problem)
    model = _SignedLogModel(problem, best.signs)
    params = _canonical(model.params(best.x))
    result = FitResult(
        params=params,
        objective=objective(params, problem),
        per_curve_rms=per_curve_rms(params, problem),
        iterations=best.iterations,
        converged=best.converged,
        starts_used=len(finite),
        diagnostics=tuple(diagnostics),
    )
    logger.info(
        f"fit order {problem.order}: objective {result.objective:.6g} kPa^2 "
        f"from start {best.index} ({len(finite)}/{config.starts} starts usable)"
    )
    if not result.converged:
        logger.warning("best fit start did not meet the polish convergence tolerance")
    return result


def _run_start(
    problem: FitProblem,
    config: FitConfig,
    index: int,
    signs: tuple[float, ...],
    x0: np.ndarray,
) -> _StartOutcome:
    model = _SignedLogModel(problem, signs)
    initial = model.objective(x0)
    best_x, best_f = np.array(x0, dtype=float), initial

    explore = minimize(
        model.objective,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": config.max_iters,
            "maxfev": 2 * config.max_iters,
            "xatol": 1e-10,
            "fatol": 1e-14,
            "adaptive": True,
        },
    )
    iterations = int(explore.nit)
    if explore.fun < best_f:
        best_x, best_f = np.array(explore.x, dtype=float), float(explore.fun)

    converged = False
    if math.isfinite(best_f):
        for _ in range(config.polish_rounds):
            before = best_f
            polish = least_squares(
                model.residuals,
                best_x,
                jac="3-point",
                diff_step=GRADIENT_STEP,
                method="trf",
                xtol=1e-14,
                ftol=1e-14,
                gtol=1e-14,
                max_nfev=config.max_iters,
            )
            iterations += int(polish.nfev)
            candidate = model.objective(polish.x)
            if candidate < best_f:
                best_x, best_f = np.array(polish.x, dtype=float), candidate
            if before == 0.0 or (before - best_f) / before < config.tol:
                converged = True
                break

    logger.debug(
        f"fit start {index} signs {signs}: {initial:.6g} -> {best_f:.6g} "
        f"after {iterations} iterations"
    )
    return _StartOutcome(
        index=index,
        signs=signs,
        initial_objective=initial,
        x=best_x,
        objective=best_f,
        iterations=iterations,
        converged=converged,
    )


def _select(outcomes: Sequence[_StartOutcome], problem: FitProblem) -> _StartOutcome:
    lowest = min(outcome.objective for outcome in outcomes)
    threshold = lowest + TIE_TOLERANCE * max(abs(lowest), np.finfo(float).tiny)
    tied = [outcome for outcome in outcomes if outcome.objective <= threshold]

    def tie_key(outcome: _StartOutcome) -> tuple[tuple[float, float], ...]:
        mus, alphas = _SignedLogModel(problem, outcome.signs).decode(outcome.x)
        return tuple(sorted(zip(alphas.tolist(), mus.tolist())))

    return min(tied, key=lambda outcome: (tie_key(outcome), outcome.index))


def _canonical(params: OgdenParameters) -> OgdenParameters:
    ordered = sorted(params.terms, key=lambda term: (term.alpha, term.mu_kpa))
    return OgdenParameters(
        terms=tuple(OgdenTerm(term.mu_kpa, term.alpha) for term in ordered),
        nu=params.nu,
        material=params.material,
    )
