"""
Tests for grids, profiles and weighted norms.
"""

import numpy as np
import pytest

from ssprofile.errors import ConfigurationError, NumericalOverflowError
from ssprofile.profile_space import (
    GridConfig, build_grid, sample_profile, weighted_norm_Y, weighted_norm_Z,
    zero_profile)


def _bracket(xi):
    return np.sqrt(1.0 + np.asarray(xi) ** 2)


def test_build_grid_contains_cutoff_breakpoints():
    """The grid holds 0.5 and 1.0 exactly and is strictly increasing."""
    grid = build_grid(GridConfig(near_zero_cut=1e-3, far_cut=100.0, nodes_per_decade=32))
    assert 0.5 in grid.nodes
    assert 1.0 in grid.nodes
    assert np.all(np.diff(grid.nodes) > 0)
    assert grid.nodes[0] > 0
    assert grid.nodes[-1] == 100.0
    assert len(grid) == 224


def test_build_grid_node_count_rule():
    """161-ish logarithmic nodes per five decades plus the linear block, minus shared nodes."""
    grid = build_grid(GridConfig(near_zero_cut=1e-2, far_cut=200.0, nodes_per_decade=64))
    assert len(grid) == 340


def test_build_grid_rejects_bad_ranges():
    """Degenerate or inverted ranges and sparse grids are configuration errors."""
    with pytest.raises(ConfigurationError):
        build_grid(near_zero_cut=1e-3, far_cut=1e-3)
    with pytest.raises(ConfigurationError):
        build_grid(near_zero_cut=0.0)
    with pytest.raises(ConfigurationError):
        build_grid(nodes_per_decade=8)


def test_zero_profile_norms():
    """The zero remainder has zero Z and Y norms."""
    grid = build_grid(far_cut=100.0)
    report = weighted_norm_Z(zero_profile(grid, 0.64))
    assert report.norm_total == 0.0
    report = weighted_norm_Y(zero_profile(grid, 0.3, "nls"))
    assert report.parts == (0.0, 0.0, 0.0, 0.0)


def test_norm_of_weight_inverse_is_one():
    """z = <xi>^-kappa gives a weighted value sup of exactly one."""
    kappa = 0.64
    grid = build_grid(far_cut=100.0)
    p = sample_profile(grid, lambda x: _bracket(x) ** -kappa,
                       lambda x: -kappa * x * _bracket(x) ** (-kappa - 2), kappa)
    report = weighted_norm_Z(p)
    assert report.sup_weighted_value == pytest.approx(1.0, rel=1e-12)
    assert report.norm_total == report.sup_weighted_value + report.sup_weighted_deriv


def test_norm_of_exponential_matches_grid_search():
    """z = exp(-xi): the weighted sup agrees with a dense search of the same weight."""
    kappa = 0.64
    grid = build_grid(far_cut=100.0)
    p = sample_profile(grid, lambda x: np.exp(-x), lambda x: -np.exp(-x), kappa)
    report = weighted_norm_Z(p)
    dense = np.linspace(grid.nodes[0], 100.0, 200001)
    oracle = np.max(_bracket(dense) ** kappa * np.exp(-dense))
    assert report.sup_weighted_value == pytest.approx(oracle, rel=1e-3)


def test_norm_scaling_and_monotonicity():
    """Norms scale with |lambda| and respect pointwise domination."""
    grid = build_grid(far_cut=100.0)
    p = sample_profile(grid, lambda x: 1.0 / (1.0 + x ** 2), lambda x: -2 * x / (1 + x ** 2) ** 2, 0.5)
    lam = 0.3 - 0.4j
    assert weighted_norm_Z(p.scaled(lam)).norm_total == pytest.approx(
        abs(lam) * weighted_norm_Z(p).norm_total, rel=1e-12)
    assert weighted_norm_Z(p.scaled(0.5)).norm_total <= weighted_norm_Z(p).norm_total


def test_norm_rejects_nonfinite_sample():
    """A NaN sample is reported with its node."""
    grid = build_grid(far_cut=100.0)
    z = np.zeros(len(grid), dtype=complex)
    z[10] = np.nan
    p = zero_profile(grid, 0.5).replace(z, np.zeros(len(grid)))
    with pytest.raises(NumericalOverflowError) as info:
        weighted_norm_Z(p)
    assert abs(info.value.node) == pytest.approx(grid.nodes[10])


def test_y_norm_logarithmic_parts():
    """z = log|xi| below one: the first two Y parts are one."""
    grid = build_grid(far_cut=100.0)

    def z(x):
        a = np.abs(x)
        return np.where(a < 1.0, np.log(a), 0.0)

    def dz(x):
        return np.where(np.abs(x) < 1.0, 1.0 / x, 0.0)

    p = sample_profile(grid, z, dz, 0.3, "nls")
    report = weighted_norm_Y(p)
    assert report.parts[0] == pytest.approx(1.0, rel=1e-12)
    assert report.parts[1] == pytest.approx(1.0, rel=1e-12)
    assert report.parts[2] == 0.0
    assert report.parts[3] == 0.0


def test_y_norm_high_frequency_parts():
    """z = <xi>^-kappa: the high-frequency parts match a direct evaluation."""
    kappa = 0.3
    grid = build_grid(far_cut=100.0)
    p = sample_profile(grid, lambda x: _bracket(x) ** -kappa,
                       lambda x: -kappa * x * _bracket(x) ** (-kappa - 2), kappa, "nls")
    report = weighted_norm_Y(p)
    assert report.parts[2] == pytest.approx(1.0, rel=1e-12)
    high = grid.nodes[grid.nodes >= 1.0]
    expected = np.max(kappa * high * _bracket(high) ** (-1.0))
    assert report.parts[3] == pytest.approx(expected, rel=1e-12)


def test_evaluate_at_nodes_and_hermitian_rule():
    """Node queries are exact and negative frequencies are conjugates."""
    grid = build_grid(far_cut=100.0)
    p = sample_profile(grid, lambda x: (1 + 1j * x) / (1 + x ** 2),
                       lambda x: (1j * (1 + x ** 2) - 2 * x * (1 + 1j * x)) / (1 + x ** 2) ** 2, 0.5)
    for k in (0, 37, 100, len(grid) - 1):
        xi = grid.nodes[k]
        assert p.evaluate(xi) == p.z_values[k]
        assert p.evaluate(-xi) == np.conj(p.z_values[k])
        assert p.evaluate_deriv(-xi) == -np.conj(p.dz_values[k])
    for xi in (0.013, 0.77, 3.3, 42.0):
        assert p.evaluate(-xi) == np.conj(p.evaluate(xi))


def test_evaluate_midpoints_close_to_closed_form():
    """Interpolated 1/<xi> is within 1e-4 relative between nodes."""
    grid = build_grid(far_cut=100.0)
    p = sample_profile(grid, lambda x: 1.0 / _bracket(x), lambda x: -x / _bracket(x) ** 3, 1.0)
    nodes = grid.nodes
    mids = np.sqrt(nodes[:-1] * nodes[1:])
    mids = mids[(mids > 0.05)]
    approx = p.evaluate(mids)
    exact = 1.0 / _bracket(mids)
    assert np.max(np.abs(approx - exact) / exact) < 1e-4


def test_tail_model_beyond_far_cut():
    """Past the far cut the remainder follows the fitted power law."""
    grid = build_grid(far_cut=100.0)
    p = sample_profile(grid, lambda x: _bracket(x) ** -0.5,
                       lambda x: -0.5 * x * _bracket(x) ** -2.5, 0.5)
    assert p.tail_exponent == pytest.approx(0.5, abs=5e-3)
    value = p.evaluate(400.0)
    assert abs(value) == pytest.approx(400.0 ** -0.5, rel=1e-2)
    assert p.evaluate_deriv(400.0) == pytest.approx(-p.tail_exponent * value / 400.0)


def test_tail_coefficient_is_fitted_over_the_window():
    """C comes from the whole last decade, not from the last sample alone."""
    grid = build_grid(far_cut=100.0)
    nodes = grid.nodes
    wiggle = lambda x: 1.0 + 0.05 * np.cos(40.0 * np.log(np.maximum(x, 1e-300)))
    p = sample_profile(grid, lambda x: (2.0 + 1.0j) * np.abs(x) ** -0.7 * wiggle(np.abs(x)),
                       lambda x: np.zeros_like(x, dtype=complex), 0.5)
    exponent, coefficient = p.tail_model()
    window = (nodes >= 10.0) & (nodes > 1.0)
    basis = nodes[window] ** -exponent
    expected = np.dot(basis, p.z_values[window]) / np.dot(basis, basis)
    assert coefficient == pytest.approx(expected)
    anchored = p.z_values[-1] * nodes[-1] ** exponent
    assert abs(coefficient - anchored) > 1e-3
    assert abs(coefficient - (2.0 + 1.0j)) < 0.1
    assert p.evaluate(300.0) == pytest.approx(coefficient * 300.0 ** -exponent)
    assert p.tail_model(-1.0) == (exponent, pytest.approx(np.conj(coefficient)))


def test_nls_profile_keeps_both_branches():
    """NLS profiles do not impose the Hermitian rule."""
    grid = build_grid(far_cut=100.0)
    p = sample_profile(grid, lambda x: np.where(x > 0, 1.0, 2.0j) / _bracket(x),
                       lambda x: -np.where(x > 0, 1.0, 2.0j) * x / _bracket(x) ** 3, 0.3, "nls")
    assert p.evaluate(-grid.nodes[50]) == p.z_negative[50]
    assert p.evaluate(-grid.nodes[50]) != np.conj(p.evaluate(grid.nodes[50]))
