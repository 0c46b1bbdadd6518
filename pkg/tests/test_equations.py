"""
Tests for the equation registry.
"""

from fractions import Fraction

import numpy as np
import pytest

from ssprofile.equations import (
    LAWS, EquationKind, critical_regularity, law_for, scaling_exponent,
    selfsimilar_exponents, validate_kappa)
from ssprofile.errors import ConfigurationError


def test_scaling_exponents():
    """(n - m)/(k - 1) for every equation."""
    assert scaling_exponent("mkdv") == 1
    assert scaling_exponent("kdv4") == Fraction(2, 3)
    assert scaling_exponent("mbo") == Fraction(1, 2)
    assert scaling_exponent("nls") == 1


def test_weight_exponent_is_critical_regularity():
    """The profile weight equals the critical Fourier-Lebesgue index."""
    for kind in EquationKind:
        assert LAWS[kind].weight_exponent == critical_regularity(kind)


def test_amplitude_decay_matches_selfsimilar_form():
    """t-exponents of the self-similar prefactor and argument."""
    expected = {"mkdv": (Fraction(1, 3), Fraction(1, 3)),
                "kdv4": (Fraction(2, 9), Fraction(1, 3)),
                "mbo": (Fraction(1, 4), Fraction(1, 2)),
                "nls": (Fraction(1, 2), Fraction(1, 2))}
    for tag, pair in expected.items():
        assert selfsimilar_exponents(tag) == pair
        assert law_for(tag).amplitude_decay == pair[0]


def test_stationary_points_are_critical():
    """Every listed resonance is a critical point of the scaled phase on sum(p) = 1."""
    for kind in EquationKind:
        law = LAWS[kind]
        signs = np.asarray(law.factor_signs, dtype=float)
        for point in law.stationary_points:
            p = np.asarray(point)
            assert abs(p.sum() - 1.0) < 1e-14
            grad = signs * law.phase_derivative(p)
            assert np.allclose(grad, grad[0]), (kind, point)


def test_phase_values():
    """Dispersion relations of the four equations."""
    assert law_for("kdv4").phase(2.0) == 8.0
    assert law_for("mbo").phase(-2.0) == -4.0
    assert law_for("nls").phase(-2.0) == 4.0
    assert law_for("mkdv").phase_derivative(2.0) == 12.0


def test_mkdv_sign_flips_constant():
    """The defocusing mKdV law carries the opposite profile constant."""
    assert law_for("mkdv", mkdv_sign=-1).profile_constant == -law_for("mkdv").profile_constant
    with pytest.raises(ConfigurationError):
        law_for("mkdv", mkdv_sign=2)


def test_validate_kappa():
    """Kappa outside the open interval names the interval."""
    assert validate_kappa("kdv4", 0.64) == 0.64
    with pytest.raises(ConfigurationError, match="0.625"):
        validate_kappa("kdv4", 0.7)
    with pytest.raises(ConfigurationError):
        validate_kappa("mbo", 0.25)


def test_parse_unknown_equation():
    """Unknown tags raise a configuration error."""
    assert EquationKind.parse("KdV4") == EquationKind.KDV4
    with pytest.raises(ConfigurationError):
        EquationKind.parse("kdv5")
