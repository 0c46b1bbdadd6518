"""
Tests for the panel rules.
"""

import numpy as np
import pytest

from ssprofile.quadrature import (
    axis_rule, gauss_legendre, panel_count, segment_rule, split_axis_rule)


def test_gauss_legendre_on_unit_interval():
    """Weights sum to one and polynomials up to degree 2n-1 are exact."""
    x, w = gauss_legendre(5)
    assert np.all((x > 0) & (x < 1))
    assert w.sum() == pytest.approx(1.0, rel=1e-14)
    assert np.dot(w, x ** 9) == pytest.approx(0.1, rel=1e-13)


def test_panel_count():
    """Nodes per phase period decide the panel count."""
    assert panel_count(10.0, 2.0 * np.pi, 8, 12) == 7
    assert panel_count(0.1, 0.0, 8, 12) == 1


def test_graded_left_singularity():
    """The t**3 grading integrates x**(-1/3) on [0, 1] to machine accuracy."""
    x, w = segment_rule(0.0, 1.0, 4, 12, grading=3, singular="left")
    assert x.shape == (1, 48)
    assert np.dot(w[0], x[0] ** (-1.0 / 3.0)) == pytest.approx(1.5, rel=1e-10)


def test_graded_right_singularity():
    """The t**2 grading at the right end handles (1 - x)**(-1/2)."""
    x, w = segment_rule(0.0, 1.0, 3, 12, grading=2, singular="right")
    assert np.dot(w[0], (1.0 - x[0]) ** -0.5) == pytest.approx(2.0, rel=1e-10)


def test_axis_rule_with_interior_break():
    """|x|**(-1/3) on [-1, 1] with the break at the origin."""
    x, w = axis_rule(-1.0, 1.0, [0.0], 3, 12, grading=3)
    assert not np.any(x == 0.0)
    assert np.dot(w, np.abs(x) ** (-1.0 / 3.0)) == pytest.approx(3.0, rel=1e-10)


def test_axis_rule_ignores_outside_breaks():
    """Break points outside the interval leave a plain composite rule."""
    x, w = axis_rule(0.0, 2.0, [-1.0, 5.0], 2, 8)
    assert len(x) == 16
    assert np.dot(w, x ** 3) == pytest.approx(4.0, rel=1e-13)


def test_split_axis_rule_rows():
    """Each row covers [lo, hi] exactly, whatever its anchor."""
    x, w = split_axis_rule(-2.0, 2.0, np.array([0.5, -0.3, 0.0]), 2, 6)
    assert x.shape == (3, 4 * 2 * 6)
    assert np.allclose(w.sum(axis=1), 4.0, rtol=1e-13)
    assert np.allclose(np.sum(w * x ** 2, axis=1), 16.0 / 3.0, rtol=1e-12)

