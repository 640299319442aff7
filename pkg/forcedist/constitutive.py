"""Incompressible Ogden hyperelasticity.

Stresses are in kPa, stretches are dimensionless. Powers of stretches are
evaluated as exp(alpha * ln(lambda)) so negative and non-integer exponents are
handled the same way as the common positive ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from .domain import LoadCase, require_finite, require_positive
from .errors import ParameterDomainError
from .storage import write_json

INCOMPRESSIBLE_NU = 0.5
PRODUCT_TOLERANCE = 1e-12
INCOMPRESSIBILITY_TOLERANCE = 1e-9
ENERGY_FLOOR = -1e-12
ESHELBY_PHI_LIMIT = 0.4
BUNDLED_MATERIALS = {
    "ecoflex_gel": "ecoflex_gel.json",
    "elastosil_25_1": "elastosil_25_1.json",
}


@dataclass(frozen=True)
class OgdenTerm:
    mu_kpa: float
    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu_kpa", require_finite(self.mu_kpa, "mu_kpa"))
        object.__setattr__(self, "alpha", require_finite(self.alpha, "alpha"))
        if self.mu_kpa * self.alpha <= PRODUCT_TOLERANCE:
            raise ParameterDomainError(
                f"Ogden term requires mu*alpha > 0, got mu={self.mu_kpa}, alpha={self.alpha}"
            )

    def to_data(self) -> dict[str, float]:
        return {"mu_kpa": self.mu_kpa, "alpha": self.alpha}


@dataclass(frozen=True)
class OgdenParameters:
    terms: tuple[OgdenTerm, ...]
    nu: float = INCOMPRESSIBLE_NU
    material: str = ""

    def __post_init__(self) -> None:
        terms = tuple(
            term if isinstance(term, OgdenTerm) else OgdenTerm(*term) for term in self.terms
        )
        if len(terms) == 0:
            raise ParameterDomainError("Ogden model needs at least one term")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "nu", require_finite(self.nu, "nu"))

    @classmethod
    def from_arrays(
        cls, mus: ArrayLike, alphas: ArrayLike, *, material: str = ""
    ) -> "OgdenParameters":
        mu_values = np.atleast_1d(np.asarray(mus, dtype=float))
        alpha_values = np.atleast_1d(np.asarray(alphas, dtype=float))
        if mu_values.shape != alpha_values.shape:
            raise ParameterDomainError("mu and alpha arrays must have equal length")
        return cls(
            terms=tuple(OgdenTerm(float(m), float(a)) for m, a in zip(mu_values, alpha_values)),
            material=material,
        )

    @property
    def order(self) -> int:
        return len(self.terms)

    @property
    def mus(self) -> np.ndarray:
        return np.array([term.mu_kpa for term in self.terms])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([term.alpha for term in self.terms])

    def to_data(self) -> dict[str, Any]:
        return {
            "material": self.material,
            "terms": [term.to_data() for term in self.terms],
            "nu": self.nu,
        }

    @classmethod
    def from_data(cls, data: dict[str, Any]) -> "OgdenParameters":
        terms = data.get("terms")
        if not isinstance(terms, list):
            raise ParameterDomainError("parameter set field [terms] must be a list")
        return cls(
            terms=tuple(
                OgdenTerm(mu_kpa=item["mu_kpa"], alpha=item["alpha"]) for item in terms
            ),
            nu=data.get("nu", INCOMPRESSIBLE_NU),
            material=str(data.get("material", "")),
        )


@dataclass(frozen=True)
class PrincipalStretchState:
    lambda1: float
    lambda2: float
    lambda3: float

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "lambda3"):
            object.__setattr__(self, name, require_positive(getattr(self, name), name))

    @classmethod
    def incompressible(cls, lambda1: float, lambda2: float) -> "PrincipalStretchState":
        l1 = require_positive(lambda1, "lambda1")
        l2 = require_positive(lambda2, "lambda2")
        return cls(l1, l2, 1.0 / (l1 * l2))

    @property
    def stretches(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3])

    @property
    def is_incompressible(self) -> bool:
        return abs(self.lambda1 * self.lambda2 * self.lambda3 - 1.0) <= INCOMPRESSIBILITY_TOLERANCE


@dataclass(frozen=True)
class LoadCaseEvaluation:
    case: LoadCase
    state: PrincipalStretchState
    q_kpa: float
    sigma_kpa: tuple[float, float, float]

    @property
    def sigma1(self) -> float:
        return self.sigma_kpa[0]


@dataclass(frozen=True)
class CompositeCorrection:
    phi: float
    ratio: float


def _pow(stretch: ArrayLike, alpha: ArrayLike) -> np.ndarray:
    return np.exp(np.multiply(alpha, np.log(stretch)))


def _require_incompressible(params: OgdenParameters) -> None:
    if params.nu != INCOMPRESSIBLE_NU:
        raise ParameterDomainError(
            f"incompressible stress formulas need nu = 0.5, got {params.nu}"
        )


def strain_energy(params: OgdenParameters, state: PrincipalStretchState) -> float:
    stretches = state.stretches[np.newaxis, :]
    mus = params.mus[:, np.newaxis]
    alphas = params.alphas[:, np.newaxis]
    per_term = (mus / alphas) * (np.sum(_pow(stretches, alphas), axis=1, keepdims=True) - 3.0)
    energy = float(np.sum(per_term))
    if state.is_incompressible and energy < ENERGY_FLOOR:
        raise ParameterDomainError(
            f"strain energy {energy:.6g} kPa is negative for an incompressible state"
        )
    return energy


def principal_stresses(
    params: OgdenParameters, state: PrincipalStretchState, q_kpa: float
) -> tuple[float, float, float]:
    _require_incompressible(params)
    q = require_finite(q_kpa, "q")
    stretches = state.stretches[np.newaxis, :]
    contributions = params.mus[:, np.newaxis] * _pow(stretches, params.alphas[:, np.newaxis])
    sigma = np.sum(contributions, axis=0) - q
    return (float(sigma[0]), float(sigma[1]), float(sigma[2]))


def load_case_state(case: LoadCase | str, stretch: float) -> PrincipalStretchState:
    load_case = LoadCase.parse(case)
    lam = require_positive(stretch, "stretch")
    if load_case is LoadCase.UA:
        lateral = math.exp(-0.5 * math.log(lam))
        return PrincipalStretchState(lam, lateral, lateral)
    if load_case is LoadCase.PS:
        return PrincipalStretchState(lam, 1.0, 1.0 / lam)
    return PrincipalStretchState(lam, lam, 1.0 / (lam * lam))


def load_case_stress(
    params: OgdenParameters, case: LoadCase | str, stretch: float
) -> LoadCaseEvaluation:
    load_case = LoadCase.parse(case)
    state = load_case_state(load_case, stretch)
    _require_incompressible(params)
    # q follows from the traction-free thickness direction
    q = float(np.sum(params.mus * _pow(state.lambda3, params.alphas)))
    sigma = list(principal_stresses(params, state, q))
    sigma[2] = 0.0
    if load_case is LoadCase.UA:
        sigma[1] = 0.0
    return LoadCaseEvaluation(
        case=load_case,
        state=state,
        q_kpa=q,
        sigma_kpa=(sigma[0], sigma[1], sigma[2]),
    )


def load_case_sigma(
    params: OgdenParameters, case: LoadCase | str, stretches: ArrayLike
) -> np.ndarray:
    """Closed-form loading-direction stress for an array of stretches."""
    load_case = LoadCase.parse(case)
    _require_incompressible(params)
    lam = np.asarray(stretches, dtype=float)
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise ParameterDomainError("stretches must be finite and positive")
    return closed_form_sigma(params.mus, params.alphas, load_case, lam)


def closed_form_sigma(
    mus: np.ndarray, alphas: np.ndarray, case: LoadCase, lam: np.ndarray
) -> np.ndarray:
    mus = mus.reshape((-1,) + (1,) * lam.ndim)
    alphas = alphas.reshape((-1,) + (1,) * lam.ndim)
    if case is LoadCase.UA:
        lateral = -0.5 * alphas
    elif case is LoadCase.PS:
        lateral = -alphas
    else:
        lateral = -2.0 * alphas
    return np.sum(mus * (_pow(lam, alphas) - _pow(lam, lateral)), axis=0)


def reduced_energy(params: OgdenParameters, case: LoadCase | str, stretch: float) -> float:
    return strain_energy(params, load_case_state(case, stretch))


def work_conjugate_count(case: LoadCase | str) -> int:
    """Number of equally loaded in-plane directions sharing the stretch."""
    return 2 if LoadCase.parse(case) is LoadCase.EB else 1


def young_modulus(params: OgdenParameters) -> float:
    return float((1.0 + params.nu) * np.sum(params.mus * params.alphas))


def eshelby_ratio(phi: float) -> CompositeCorrection:
    fraction = require_finite(phi, "phi")
    if fraction < 0.0 or fraction >= ESHELBY_PHI_LIMIT:
        raise ParameterDomainError(
            f"particle volume fraction must lie in [0, {ESHELBY_PHI_LIMIT}), got {fraction}"
        )
    return CompositeCorrection(phi=fraction, ratio=1.0 / (1.0 - 2.5 * fraction))


def composite_modulus(params: OgdenParameters, phi: float) -> float:
    return young_modulus(params) * eshelby_ratio(phi).ratio


def load_material(name: str) -> OgdenParameters:
    key = name.strip().lower().replace("-", "_").replace(" ", "_").replace(":", "_")
    filename = BUNDLED_MATERIALS.get(key)
    if filename is None:
        expected = ", ".join(sorted(BUNDLED_MATERIALS))
        raise ParameterDomainError(f"unknown bundled material [{name}], expected one of: {expected}")
    text = resources.files("forcedist").joinpath("data").joinpath(filename).read_text(encoding="utf-8")
    return OgdenParameters.from_data(json.loads(text))


def load_parameters(path: Path) -> OgdenParameters:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ParameterDomainError(f"parameter file is not an object: {path}")
    return OgdenParameters.from_data(data)


def resolve_material(reference: str) -> OgdenParameters:
    """Accept a bundled material name or a path to a parameter JSON file."""
    path = Path(reference).expanduser()
    if path.suffix == ".json" or path.is_file():
        return load_parameters(path)
    return load_material(reference)


def dump_parameters(params: OgdenParameters, path: Path) -> Path:
    return write_json(path, params.to_data())
