from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from forcedist.constitutive import (
    OgdenParameters,
    OgdenTerm,
    PrincipalStretchState,
    composite_modulus,
    dump_parameters,
    eshelby_ratio,
    load_case_sigma,
    load_case_stress,
    load_material,
    principal_stresses,
    reduced_energy,
    resolve_material,
    strain_energy,
    work_conjugate_count,
    young_modulus,
)
from forcedist.domain import LoadCase
from forcedist.errors import ParameterDomainError

CASES = (LoadCase.UA, LoadCase.PS, LoadCase.EB)


@pytest.fixture
def ecoflex() -> OgdenParameters:
    return load_material("ecoflex_gel")


def test_bundled_young_moduli_match_published_values() -> None:
    assert young_modulus(load_material("ecoflex_gel")) == pytest.approx(16.9, abs=0.05)
    assert young_modulus(load_material("elastosil_25_1")) == pytest.approx(370.2, abs=0.5)


def test_single_term_young_modulus() -> None:
    params = OgdenParameters(terms=(OgdenTerm(1.0, 2.0),))

    assert young_modulus(params) == pytest.approx(3.0)


@pytest.mark.parametrize("mu, alpha", [(1.0, -2.0), (-1.0, 2.0), (0.0, 3.0)])
def test_term_rejects_non_positive_product(mu: float, alpha: float) -> None:
    with pytest.raises(ParameterDomainError, match="mu\\*alpha > 0"):
        OgdenTerm(mu, alpha)


def test_parameters_need_a_term() -> None:
    with pytest.raises(ParameterDomainError):
        OgdenParameters(terms=())


def test_strain_energy_vanishes_at_identity(ecoflex: OgdenParameters) -> None:
    assert strain_energy(ecoflex, PrincipalStretchState(1.0, 1.0, 1.0)) == 0.0


def test_strain_energy_matches_direct_sum(ecoflex: OgdenParameters) -> None:
    state = PrincipalStretchState(2.0, 2.0**-0.5, 2.0**-0.5)
    expected = math.fsum(
        mu / alpha * (2.0**alpha + 2.0 * 2.0 ** (-0.5 * alpha) - 3.0)
        for mu, alpha in ((7.9652, 1.2769), (0.3093, 3.5676))
    )

    assert strain_energy(ecoflex, state) == pytest.approx(expected, rel=1e-12)


def test_strain_energy_is_symmetric_and_non_negative(ecoflex: OgdenParameters) -> None:
    rng = np.random.default_rng(3)
    for l1, l2 in rng.uniform(0.5, 2.5, size=(20, 2)):
        forward = strain_energy(ecoflex, PrincipalStretchState.incompressible(l1, l2))
        swapped = strain_energy(ecoflex, PrincipalStretchState.incompressible(l2, l1))
        assert forward == pytest.approx(swapped, rel=1e-12)
        assert forward >= -1e-12


def test_strain_energy_rejects_negative_energy() -> None:
    params = OgdenParameters(terms=((1.0, 2.0),))
    object.__setattr__(params.terms[0], "mu_kpa", -1.0)

    with pytest.raises(ParameterDomainError, match="negative"):
        strain_energy(params, PrincipalStretchState.incompressible(1.5, 1.0))


def test_incompressible_state_closes_the_volume() -> None:
    state = PrincipalStretchState.incompressible(1.7, 0.9)

    assert state.is_incompressible
    assert state.lambda3 == pytest.approx(1.0 / (1.7 * 0.9))


def test_state_rejects_non_positive_stretch() -> None:
    with pytest.raises(ParameterDomainError):
        PrincipalStretchState(1.0, 0.0, 1.0)


def test_principal_stresses_at_identity(ecoflex: OgdenParameters) -> None:
    q = float(np.sum(ecoflex.mus))
    sigma = principal_stresses(ecoflex, PrincipalStretchState(1.0, 1.0, 1.0), q)

    np.testing.assert_allclose(sigma, (0.0, 0.0, 0.0), atol=1e-12)


def test_principal_stresses_shift_linearly_with_pressure(ecoflex: OgdenParameters) -> None:
    state = PrincipalStretchState.incompressible(1.3, 1.1)
    base = np.array(principal_stresses(ecoflex, state, 2.0))
    shifted = np.array(principal_stresses(ecoflex, state, 2.5))

    np.testing.assert_allclose(shifted, base - 0.5, atol=1e-12)


def test_uniaxial_stress_agrees_with_free_pressure(ecoflex: OgdenParameters) -> None:
    lam = 1.5
    state = PrincipalStretchState(lam, lam**-0.5, lam**-0.5)
    q = float(np.sum(ecoflex.mus * state.lambda2**ecoflex.alphas))
    sigma = principal_stresses(ecoflex, state, q)

    assert sigma[1] == pytest.approx(0.0, abs=1e-12)
    assert sigma[0] == pytest.approx(load_case_stress(ecoflex, "UA", lam).sigma1, rel=1e-12)


@pytest.mark.parametrize("case", CASES)
def test_load_case_is_stress_free_when_undeformed(ecoflex: OgdenParameters, case: LoadCase) -> None:
    assert load_case_stress(ecoflex, case, 1.0).sigma1 == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("case", CASES)
def test_traction_free_components_are_exactly_zero(ecoflex: OgdenParameters, case: LoadCase) -> None:
    evaluation = load_case_stress(ecoflex, case, 1.8)

    assert evaluation.sigma_kpa[2] == 0.0
    if case is LoadCase.UA:
        assert evaluation.sigma_kpa[1] == 0.0
    recomputed = principal_stresses(ecoflex, evaluation.state, evaluation.q_kpa)
    assert recomputed[0] == pytest.approx(evaluation.sigma1, abs=1e-12)
    assert recomputed[2] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("case, factor", [(LoadCase.UA, 1.0), (LoadCase.PS, 4.0 / 3.0), (LoadCase.EB, 2.0)])
def test_small_strain_slope_follows_young_modulus(
    ecoflex: OgdenParameters, case: LoadCase, factor: float
) -> None:
    h = 1e-6
    slope = (load_case_stress(ecoflex, case, 1 + h).sigma1 - load_case_stress(ecoflex, case, 1 - h).sigma1) / (2 * h)

    assert slope == pytest.approx(factor * young_modulus(ecoflex), rel=1e-4)


@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("lam", [1.2, 2.0, 3.0])
def test_stress_is_work_conjugate_of_reduced_energy(
    ecoflex: OgdenParameters, case: LoadCase, lam: float
) -> None:
    h = 1e-5 * lam
    derivative = (reduced_energy(ecoflex, case, lam + h) - reduced_energy(ecoflex, case, lam - h)) / (2 * h)
    expected = lam * derivative / work_conjugate_count(case)

    assert load_case_stress(ecoflex, case, lam).sigma1 == pytest.approx(expected, rel=1e-6)


def _random_parameters(rng: np.random.Generator) -> OgdenParameters:
    order = int(rng.integers(1, 4))
    signs = rng.choice([-1.0, 1.0], size=order)
    mus = signs * rng.uniform(0.5, 50.0, size=order)
    alphas = signs * rng.uniform(0.5, 6.0, size=order)
    return OgdenParameters.from_arrays(mus, alphas)


def test_consistency_on_random_parameter_sets() -> None:
    rng = np.random.default_rng(2024)
    factors = {LoadCase.UA: 1.0, LoadCase.PS: 4.0 / 3.0, LoadCase.EB: 2.0}
    for _ in range(100):
        params = _random_parameters(rng)
        modulus = young_modulus(params)
        lam = float(rng.uniform(1.2, 3.0))
        for case, factor in factors.items():
            h = 1e-6
            upper = load_case_stress(params, case, 1 + h).sigma1
            lower = load_case_stress(params, case, 1 - h).sigma1
            assert (upper - lower) / (2 * h) == pytest.approx(factor * modulus, rel=1e-4)

            step = 1e-5 * lam
            derivative = (
                reduced_energy(params, case, lam + step) - reduced_energy(params, case, lam - step)
            ) / (2 * step)
            expected = lam * derivative / work_conjugate_count(case)
            assert load_case_stress(params, case, lam).sigma1 == pytest.approx(expected, rel=1e-6)


def test_uniaxial_stress_increases_on_tested_range() -> None:
    lam = np.linspace(1.0, 3.0, 201)
    for name in ("ecoflex_gel", "elastosil_25_1"):
        sigma = load_case_sigma(load_material(name), "UA", lam)
        assert np.all(np.diff(sigma) > 0)


def test_vectorized_sigma_matches_pointwise(ecoflex: OgdenParameters) -> None:
    lam = np.array([1.0, 1.25, 2.0, 2.75])
    for case in CASES:
        pointwise = [load_case_stress(ecoflex, case, value).sigma1 for value in lam]
        np.testing.assert_allclose(load_case_sigma(ecoflex, case, lam), pointwise, rtol=1e-12)


def test_load_case_rejects_non_positive_stretch(ecoflex: OgdenParameters) -> None:
    with pytest.raises(ParameterDomainError):
        load_case_stress(ecoflex, "UA", 0.0)
    with pytest.raises(ParameterDomainError):
        load_case_sigma(ecoflex, "EB", [1.0, -1.0])


def test_compressible_parameters_are_refused(ecoflex: OgdenParameters) -> None:
    params = OgdenParameters(terms=ecoflex.terms, nu=0.45)

    with pytest.raises(ParameterDomainError, match="nu = 0.5"):
        load_case_stress(params, "UA", 1.2)


@pytest.mark.parametrize("phi, ratio", [(0.0, 1.0), (0.2, 2.0)])
def test_eshelby_ratio_exact_values(phi: float, ratio: float) -> None:
    assert eshelby_ratio(phi).ratio == pytest.approx(ratio)


def test_eshelby_ratio_for_particle_layer() -> None:
    assert eshelby_ratio(0.0196).ratio == pytest.approx(1.0515, abs=0.0005)


@pytest.mark.parametrize("phi", [-0.01, 0.4, 0.5, float("nan")])
def test_eshelby_ratio_rejects_out_of_domain(phi: float) -> None:
    with pytest.raises(ParameterDomainError):
        eshelby_ratio(phi)


def test_composite_modulus_scales_young_modulus(ecoflex: OgdenParameters) -> None:
    assert composite_modulus(ecoflex, 0.2) == pytest.approx(2.0 * young_modulus(ecoflex))


def test_unknown_material_lists_bundled_names() -> None:
    with pytest.raises(ParameterDomainError, match="ecoflex_gel"):
        load_material("rubber")


def test_parameter_file_round_trips(tmp_path: Path, ecoflex: OgdenParameters) -> None:
    path = dump_parameters(ecoflex, tmp_path / "params.json")

    assert json.loads(path.read_text(encoding="utf-8"))["material"] == "Ecoflex GEL"
    assert resolve_material(str(path)) == ecoflex
    assert resolve_material("Ecoflex-GEL") == ecoflex
