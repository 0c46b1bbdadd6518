"""
Tests for physical-space synthesis and the evolution cross-check.
"""

import numpy as np
import pytest

from ssprofile.ansatz import AnsatzParams, chi, chi_prime
from ssprofile.equations import EquationKind, selfsimilar_exponents
from ssprofile.errors import ConfigurationError
from ssprofile.fixedpoint import SolveConfig, picard_solve
from ssprofile.profile_space import sample_profile
from ssprofile.reconstruct import (
    PhysicalField, ReconstructConfig, dispersion_sign, evolution_crosscheck, hat_profile,
    periodic_field, physical_profile, selfsimilar_field, stationary_frequency)

SMALL = ReconstructConfig(x_max=5.0, x_nodes=11)


def _flat_remainder(A):
    """Remainder that makes S_A + z equal to A on the whole positive axis."""
    cfg = SolveConfig(equation="kdv4")
    return sample_profile(cfg.grid(), lambda x: A * (1.0 - chi(x)),
                          lambda x: -A * chi_prime(x), cfg.kappa, EquationKind.KDV4)


def test_config_validation():
    """Odd mode counts, single nodes and low cuts are rejected."""
    with pytest.raises(ConfigurationError):
        ReconstructConfig(crosscheck_modes=1001)
    with pytest.raises(ConfigurationError):
        ReconstructConfig(x_nodes=1)
    with pytest.raises(ConfigurationError):
        ReconstructConfig(synthesis_cut=0.5)
    cfg = ReconstructConfig.from_dict({"reconstruct": {"x_max": 10.0, "x_nodes": 21}})
    assert cfg.nodes()[0] == -10.0
    assert len(cfg.nodes()) == 21


def test_dispersion_sign_and_stationary_frequency():
    """mBO propagates with the opposite sign; the stationary frequencies follow the phases."""
    assert dispersion_sign("mbo") == -1
    assert dispersion_sign(EquationKind.KDV4) == 1
    assert stationary_frequency("kdv4", 12.0) == pytest.approx(2.0)
    assert stationary_frequency("mkdv", -3.0) == pytest.approx(3.0)
    assert stationary_frequency("mbo", 4.0) == pytest.approx(6.0)
    assert stationary_frequency("nls", 4.0) == pytest.approx(2.0)


def test_hat_profile_weight():
    """Beyond the cutoff the quartic KdV transform is A |xi|^(-1/3) in modulus."""
    params = AnsatzParams.build(EquationKind.KDV4, 0.02 + 0.01j)
    xi = np.array([2.0, 5.0, 11.0])
    values = hat_profile(params, None, xi)
    assert np.allclose(np.abs(values) * xi ** (1.0 / 3.0), abs(params.A), rtol=1e-12)
    assert hat_profile(params, None, 0.0) == 0
    assert hat_profile(params, None, -5.0) == pytest.approx(np.conj(hat_profile(params, None, 5.0)))


def test_zero_data_gives_zero_field():
    """A = 0 and z = 0 synthesize the zero field with zero error."""
    params = AnsatzParams.build(EquationKind.KDV4, 0.0)
    field = physical_profile(params, None, cfg=SMALL)
    assert np.all(field.values == 0)
    assert np.all(field.errors == 0)
    assert field.metadata["unresolved_nodes"] == 0


def test_physical_profile_is_real_and_linear_in_the_ansatz():
    """Real equations synthesize real fields; the ansatz part is linear in A."""
    one = physical_profile(AnsatzParams.build(EquationKind.KDV4, 0.01), None, cfg=SMALL)
    two = physical_profile(AnsatzParams.build(EquationKind.KDV4, 0.02), None, cfg=SMALL)
    assert np.all(one.values.imag == 0)
    assert np.allclose(two.values, 2.0 * one.values, rtol=1e-12, atol=1e-15)
    info = one.to_dict()
    assert info["equation"] == "kdv4"
    assert info["nodes"] == 11
    assert info["synthesis_cut"] == pytest.approx(2.0 * np.sqrt(5.0 / 3.0) + 8.0)


def test_selfsimilar_rescaling():
    """t = 1 is the identity; t = 8 doubles x for quartic KdV; rescalings compose."""
    field = PhysicalField(x=np.linspace(-1.0, 1.0, 5), values=np.ones(5, dtype=complex), t=1.0,
                          equation=EquationKind.KDV4)
    same = selfsimilar_field(field, 1.0)
    assert np.array_equal(same.x, field.x)
    assert np.array_equal(same.values, field.values)

    alpha, _ = selfsimilar_exponents(EquationKind.KDV4)
    later = selfsimilar_field(field, 8.0)
    assert np.allclose(later.x, 2.0 * field.x)
    assert np.allclose(later.values, 8.0 ** (-float(alpha)))

    stepwise = selfsimilar_field(selfsimilar_field(field, 2.0), 8.0)
    assert np.allclose(stepwise.x, later.x)
    assert np.allclose(stepwise.values, later.values)
    with pytest.raises(ConfigurationError):
        selfsimilar_field(field, 0.0)


def test_periodic_field_is_real():
    """Hermitian transforms give real periodic samples on [-L/2, L/2)."""
    params = AnsatzParams.build(EquationKind.KDV4, 0.01)
    field = periodic_field(params, None, 1.0, 100.0, 1024)
    assert field.x[0] == -50.0
    assert len(field.x) == 1024
    assert np.all(field.values.imag == 0)
    assert np.all(np.isfinite(field.values.real))


def test_crosscheck_rejects_bad_settings():
    """dt beyond 0.2 and windows too coarse for the comparison region raise."""
    params = AnsatzParams.build(EquationKind.KDV4, 0.01)
    with pytest.raises(ConfigurationError):
        evolution_crosscheck(params, None, 0.5)
    with pytest.raises(ConfigurationError):
        evolution_crosscheck(AnsatzParams.build(EquationKind.MBO, 0.01), None, 0.1)


def test_crosscheck_of_zero_field():
    """The zero field stays zero."""
    cfg = ReconstructConfig(crosscheck_window=100.0, crosscheck_modes=1024, crosscheck_steps=10)
    report = evolution_crosscheck(AnsatzParams.build(EquationKind.KDV4, 0.0), None, 0.1, cfg)
    assert report.discrepancy == 0
    assert report.compare_radius == 25.0


def test_crosscheck_of_homogeneous_profile():
    """A flat transform solves the linear flow exactly; small data barely moves it."""
    A = 1e-3
    params = AnsatzParams.build(EquationKind.KDV4, A)
    cfg = ReconstructConfig(crosscheck_window=200.0, crosscheck_modes=4096, crosscheck_steps=50)
    report = evolution_crosscheck(params, _flat_remainder(A), 0.1, cfg)
    assert report.linear_discrepancy < 1e-4
    assert report.discrepancy <= 5e-3
    assert report.to_dict()["steps"] == 50


@pytest.mark.slow
def test_crosscheck_of_solved_profile():
    """A converged quartic KdV profile evolves into its own rescaling."""
    z, params, _ = picard_solve(SolveConfig(equation="kdv4", amplitude=0.01))
    report = evolution_crosscheck(params, z, 0.1)
    assert report.discrepancy <= 5e-3
