"""
Tests for the multilinear operators, stationary phase and the oracle.
"""

import numpy as np
import pytest

from ssprofile.equations import EquationKind
from ssprofile.errors import ConfigurationError, DegenerateCriticalPointError
from ssprofile.oscillatory import (
    Integrand, QuadratureSpec, eval_cubic_mkdv, eval_M, eval_T, evaluate_many,
    gaussian_factor, oracle_bruteforce, resonance_data, stationary_phase_leading, taper,
    taper_slope, zero_factor)


def test_taper_profile():
    """One inside, zero at the radius, one half in the middle of the band."""
    assert taper(0.5, 1.0, 0.8) == 1.0
    assert taper(-1.0, 1.0, 0.8) == 0.0
    assert taper(0.9, 1.0, 0.8) == pytest.approx(0.5, abs=1e-12)


def test_taper_slope_matches_difference_quotient():
    """The taper slope is the derivative of the taper, zero off the band."""
    x = np.array([-2.85, -2.5, 2.45, 2.7, 2.95])
    h = 1e-6
    quotient = (taper(x + h, 3.0) - taper(x - h, 3.0)) / (2.0 * h)
    assert np.allclose(taper_slope(x, 3.0), quotient, rtol=1e-6, atol=1e-8)
    assert np.all(taper_slope(np.array([0.0, 1.0, -2.3, 3.5]), 3.0) == 0.0)


def test_quadrature_spec_validation():
    """Bad tolerances and taper fractions are configuration errors."""
    with pytest.raises(ConfigurationError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ConfigurationError):
        QuadratureSpec(taper_fraction=1.0)
    assert QuadratureSpec().radius(12.0) == 12.0
    assert QuadratureSpec(truncation_radius=5.0).radius(12.0) == 5.0


def test_integrand_factor_count():
    """Each operator takes exactly k factors."""
    g = gaussian_factor()
    with pytest.raises(ConfigurationError):
        Integrand(EquationKind.KDV4, (g, g, g))


def test_nls_middle_slot_is_conjugate_reflected():
    """The sign -1 slot evaluates conj f(-x)."""
    f = gaussian_factor(0.3, 0.5, 1.0 + 2.0j, 0.7)
    integrand = Integrand(EquationKind.NLS, (f, f, f))
    x = np.array([-0.4, 0.1, 0.8])
    assert np.allclose(integrand.factor_values(1, x), np.conj(f(-x)))
    assert np.allclose(integrand.factor_values(0, x), f(x))


def test_zero_factor_gives_zero():
    """A vanishing factor gives an exactly vanishing M."""
    g = gaussian_factor(0.2, 0.4)
    result = eval_M(g, g, zero_factor(), g, 0.5, radius=1.5)
    assert result.value == 0


def test_cubic_operator_is_multilinear():
    """The node layout is value independent, so scaling a factor scales the result."""
    f1 = gaussian_factor(0.3, 0.5)
    f2 = gaussian_factor(0.2, 0.45, 0.8)
    f3 = gaussian_factor(0.0, 0.5, 1.0, 0.4)
    base = eval_cubic_mkdv(f1, f2, f3, 0.9, radius=2.0)
    scaled = eval_cubic_mkdv(f1, gaussian_factor(0.2, 0.45, 2.4), f3, 0.9, radius=2.0)
    assert base.converged
    assert scaled.value == pytest.approx(3.0 * base.value, rel=1e-6)


def test_evaluate_many_keeps_order():
    """Concurrent evaluation returns the values of single evaluations in order."""
    h = gaussian_factor(0.6, 0.5)
    integrand = Integrand(EquationKind.NLS, (h, gaussian_factor(-0.4, 0.6, 1.0j), h))
    etas = [0.6, 1.2]
    many = evaluate_many(integrand, etas, radius=3.0)
    for eta, result in zip(etas, many):
        single = eval_T(h, gaussian_factor(-0.4, 0.6, 1.0j), h, eta, radius=3.0)
        assert result.value == pytest.approx(single.value, rel=1e-12, abs=1e-15)


def test_resonance_data_values():
    """Phase, determinant and signature at the listed resonances."""
    third = resonance_data(EquationKind.MBO, (1 / 3, 1 / 3, 1 / 3))
    assert third["phase"] == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert third["determinant"] == pytest.approx(12.0, rel=1e-12)
    assert third["signature"] == -2
    resonant = resonance_data(EquationKind.MBO, (1.0, 1.0, -1.0))
    assert resonant["determinant"] == pytest.approx(-4.0, rel=1e-12)
    assert resonant["signature"] == 0
    nls = resonance_data(EquationKind.NLS, (1.0, -1.0, 1.0))
    assert nls["phase"] == pytest.approx(0.0, abs=1e-14)
    assert nls["determinant"] == pytest.approx(-4.0, rel=1e-12)
    quartic = resonance_data(EquationKind.KDV4, (0.25, 0.25, 0.25, 0.25))
    assert quartic["phase"] == pytest.approx(15.0 / 16.0, rel=1e-12)
    assert quartic["determinant"] == pytest.approx(-13.5, rel=1e-12)
    assert quartic["signature"] == -3


def test_stationary_phase_fresnel():
    """Leading term of the Fresnel integral is sqrt(2 pi / lam) exp(i pi / 4)."""
    lam = 50.0
    value = stationary_phase_leading(lambda x: 0.5 * float(np.sum(x ** 2)), 1.0, [0.0], lam)
    assert value == pytest.approx(np.sqrt(2.0 * np.pi / lam) * np.exp(1j * np.pi / 4.0),
                                  rel=1e-6)


def test_stationary_phase_against_gaussian_integral():
    """For a Gaussian amplitude the leading term is accurate to O(1/lam)."""
    lam = 400.0
    exact = np.sqrt(np.pi / (1.0 - 0.5j * lam))
    leading = stationary_phase_leading(lambda x: 0.5 * float(x[0] ** 2),
                                       lambda x: float(np.exp(-x[0] ** 2)), [0.0], lam,
                                       hessian=[[1.0]])
    assert abs(leading - exact) / abs(exact) < 1e-2


def test_degenerate_critical_point():
    """A cubic phase has a singular Hessian at its critical point."""
    with pytest.raises(DegenerateCriticalPointError):
        stationary_phase_leading(lambda x: float(x[0] ** 3), 1.0, [0.0], 10.0)


@pytest.mark.slow
def test_panel_engine_matches_oracle():
    """One T instance of the oracle suite, to the suite's tolerance."""
    h1 = gaussian_factor(0.6, 0.5)
    h2 = gaussian_factor(-0.4, 0.6, 1.0j)
    h3 = gaussian_factor(0.5, 0.5, 1.0, 0.3)
    spec = QuadratureSpec()
    panel = eval_T(h1, h2, h3, 1.2, spec, radius=3.0)
    oracle = oracle_bruteforce(Integrand(EquationKind.NLS, (h1, h2, h3)), 1.2, spec,
                               radius=3.0)
    allowed = 10.0 * max(spec.rel_tol * abs(oracle), spec.abs_tol)
    assert abs(panel.truncated_value - oracle) <= allowed


def _lorentzian(x):
    return (1.0 + 0.0j) / (1.0 + np.asarray(x, dtype=float) ** 2)


def test_tail_vanishes_without_band_mass():
    """Factors that are negligible past 0.8 L leave no tail term."""
    g = gaussian_factor(0.0, 0.2)
    result = eval_T(g, g, g, 0.3, radius=3.0)
    assert abs(result.tail) < 1e-40
    assert result.truncation_error < 1e-40
    assert result.value == pytest.approx(result.truncated_value + result.tail)


def test_tail_is_reported_for_slowly_decaying_factors():
    """Power-law factors give a tail term that is added and scales with the factors."""
    g = gaussian_factor(0.1, 0.6)
    base = eval_T(_lorentzian, g, _lorentzian, 0.5, radius=3.0)
    assert base.converged
    assert abs(base.tail) > 0.0
    assert base.truncation_error >= abs(base.tail)
    assert base.value == pytest.approx(base.truncated_value + base.tail)
    doubled = eval_T(_lorentzian, gaussian_factor(0.1, 0.6, 2.5), _lorentzian, 0.5, radius=3.0)
    assert doubled.tail == pytest.approx(2.5 * base.tail, rel=1e-6)
