"""
Tests for the fixed-point maps and the Picard driver.
"""

import numpy as np
import pytest

from ssprofile import fixedpoint
from ssprofile.ansatz import AnsatzParams
from ssprofile.equations import EquationKind
from ssprofile.errors import ConfigurationError, NonConvergenceError
from ssprofile.fixedpoint import (
    ProfileUpdate, SolveConfig, SolveReport, _extend_beyond_window, _picard, c_pm_nls,
    contraction_ratios, fixed_point_residual, gamma_4kdv, gamma_mbo, gamma_mkdv, gamma_nls,
    invert_c_4kdv, log_phase_residual, picard_solve, scattering_c_4kdv, solve_amplitude_mbo,
    tail_closure, theta_mbo)
from ssprofile.profile_space import build_grid, profile_norm, sample_profile, zero_profile
from ssprofile.verify import (
    check_fixedpoint_residual, check_profile_decay, check_zero_frequency_anchor)


def _bump(cfg, scale=0.01):
    return sample_profile(cfg.grid(), lambda x: scale * np.exp(-x),
                          lambda x: -scale * np.exp(-x), cfg.kappa, cfg.equation)


def test_contraction_ratios():
    """Ratios of successive distances; zero distances are skipped."""
    assert contraction_ratios([1.0, 0.5, 0.25]) == [0.5, 0.5]
    assert contraction_ratios([0.0, 1.0]) == []
    assert contraction_ratios([2.0]) == []


def test_tail_closure_is_exact_for_power_laws():
    """A pure power law is integrated to infinity without error."""
    s = np.linspace(1.0, 40.0, 400)
    decay = 0.6
    r = (0.3 - 0.1j) * s ** (-1.0 - decay)
    expected = (0.3 - 0.1j) * 40.0 ** (-decay) / decay
    assert tail_closure(s, r, 40.0, decay) == pytest.approx(expected, rel=1e-10)


def test_solve_config_defaults_and_validation():
    """Defaults follow the equation; bad settings are configuration errors."""
    cfg = SolveConfig(equation="mbo")
    assert cfg.kappa == 0.2
    assert cfg.window == 256.0
    assert cfg.far_cut == 1000.0
    assert SolveConfig(equation="mkdv").window == 32.0
    assert SolveConfig(window=2000.0).far_cut == 2000.0
    assert cfg.distance_kappa == pytest.approx(0.18)
    with pytest.raises(ConfigurationError):
        SolveConfig(equation="mbo", amplitude=0.01j)
    with pytest.raises(ConfigurationError):
        SolveConfig(damping=0.0)
    with pytest.raises(ConfigurationError):
        SolveConfig(backend="fft")
    with pytest.raises(ConfigurationError):
        SolveConfig(window=1.0)
    with pytest.raises(ConfigurationError):
        SolveConfig(window=100.0, far_cut=50.0)
    with pytest.raises(ConfigurationError):
        SolveConfig(equation="kdv4", kappa=0.5)


def test_solve_config_from_stored_dict():
    """A stored solver section rebuilds the same configuration."""
    cfg = SolveConfig(equation="nls", amplitude="0.01+0.02i", max_iters=12)
    values = cfg.to_dict()
    quadrature = values.pop("quadrature")
    restored = SolveConfig.from_dict({"solver": values, "quadrature": quadrature})
    assert restored == cfg
    assert restored.amplitude == 0.01 + 0.02j


def test_solve_report_from_dict():
    """Complex pairs and the norm summary survive serialization."""
    cfg = SolveConfig(equation="nls")
    report = SolveReport(equation=EquationKind.NLS, iterations=3, distances=[1e-2, 1e-4, 1e-6],
                         contraction_estimates=[1e-2, 1e-2],
                         final_norm=profile_norm(_bump(cfg), cfg.kappa),
                         c_value=0.01 + 0.001j, A_value=0.01, c_minus=0.011 - 0.002j,
                         residual=1e-6, flags={"backend": "spectral"})
    restored = SolveReport.from_dict(report.to_dict())
    assert restored.c_minus == 0.011 - 0.002j
    assert restored.B_value is None
    assert restored.final_norm.norm_total == pytest.approx(report.final_norm.norm_total)
    assert restored.flags == {"backend": "spectral"}


def test_picard_converges_for_a_contraction():
    """z -> z/2 + g converges to 2g with contraction estimates of one half."""
    cfg = SolveConfig(equation="kdv4")
    g = _bump(cfg)
    z0 = zero_profile(cfg.grid(), cfg.kappa, EquationKind.KDV4)
    z, _, distances = _picard(lambda z: ProfileUpdate(z.combine(g, 0.5, 1.0), 0j), z0, cfg,
                              "test")
    assert distances[-1] <= cfg.picard_tol
    assert np.allclose(z.z_values, 2.0 * g.z_values, atol=1e-7)
    assert np.allclose(contraction_ratios(distances), 0.5, rtol=1e-6)


def test_picard_damping_and_step_budget():
    """Damping slows the iteration; an exhausted budget raises with the history."""
    cfg = SolveConfig(equation="kdv4", damping=0.5, max_iters=3)
    g = _bump(cfg)
    z0 = zero_profile(cfg.grid(), cfg.kappa, EquationKind.KDV4)
    with pytest.raises(NonConvergenceError) as excinfo:
        _picard(lambda z: ProfileUpdate(z.combine(g, 0.5, 1.0), 0j), z0, cfg, "test")
    history = excinfo.value.history
    assert len(history) == 3
    assert history[1] / history[0] == pytest.approx(0.75, rel=1e-6)


def test_zero_data_needs_no_inversion():
    """c = 0 gives A = 0 directly."""
    assert invert_c_4kdv(0.0) == 0


def test_kdv4_solve_reuses_the_inversion_remainder(monkeypatch):
    """The remainder solved at the inverted A is not solved a second time."""
    calls = []
    original = fixedpoint._solve_remainder_4kdv

    def counting(A, cfg, z0=None):
        calls.append(A)
        return original(A, cfg, z0)

    def linear_map(params, z, cfg, c=None):
        return ProfileUpdate(z.combine(z, 0.0, 0.0), 0.8 * params.A)

    monkeypatch.setattr(fixedpoint, "apply_profile_map", linear_map)
    monkeypatch.setattr(fixedpoint, "_solve_remainder_4kdv", counting)
    z, params, report = picard_solve(SolveConfig(equation="kdv4", amplitude=0.008))
    assert params.A == pytest.approx(0.01, abs=2e-8)
    assert len(calls) == len(report.flags["inversion_residuals"])
    assert calls[-1] == params.A


def test_amplitude_above_threshold():
    """Large data is rejected before any work is done."""
    with pytest.raises(ConfigurationError):
        picard_solve(SolveConfig(equation="nls", amplitude=0.5))


@pytest.mark.slow
def test_nls_solve_small_data():
    """A small NLS solve contracts and keeps A fixed."""
    cfg = SolveConfig(equation="nls", amplitude=0.01)
    z, params, report = picard_solve(cfg)
    assert params.A == 0.01
    assert report.A_value == 0.01
    assert report.c_minus is not None
    assert all(r < 1.0 for r in report.contraction_estimates)
    assert report.final_norm.norm_total < 0.01
    assert fixed_point_residual(z, params, cfg) < 1e-6
    assert check_fixedpoint_residual(z, params, cfg) < 1e-4
    assert check_profile_decay(z).passed


@pytest.mark.slow
def test_kdv4_solve_hits_the_target_value():
    """The inverted amplitude reproduces the requested zero-frequency value."""
    cfg = SolveConfig(equation="kdv4", amplitude=0.01)
    z, params, report = picard_solve(cfg)
    assert report.c_value == pytest.approx(0.01, abs=10 * cfg.inversion_tol)
    assert abs(params.A - 0.01) < 1e-3


def test_log_phase_residual_recovers_the_coefficient():
    """The 1/eta log-phase coefficient is separated from the integrable power law."""
    s = np.geomspace(1.0, 256.0, 400)
    rate = 0.02 - 0.001j
    gamma = 3e-6 + 1e-6j
    r = gamma * np.exp(1j * rate * np.log(s)) / s + (2e-5 - 1e-5j) * s ** -1.2
    assert log_phase_residual(s, r, 256.0, 0.2, rate) == pytest.approx(gamma, rel=1e-8)
    assert log_phase_residual(s, r, 256.0, 0.2, 0j) == 0j


def test_nodes_beyond_the_window_follow_the_tail():
    """Grid nodes past the computed window take the fitted power law."""
    cfg = SolveConfig(equation="nls")
    z = sample_profile(cfg.grid(), lambda x: 0.01 * x ** -0.8,
                       lambda x: -0.008 * x ** -1.8, cfg.kappa, EquationKind.NLS)
    m = int(np.sum(z.grid.nodes <= cfg.window))
    assert m < len(z.grid.nodes)
    values, derivs = _extend_beyond_window(z, z.z_values[:m], z.dz_values[:m], 1.0)
    assert np.allclose(values, z.z_values, rtol=1e-8)
    assert np.allclose(derivs, z.dz_values, rtol=1e-8)
    assert z.grid.nodes[-1] == pytest.approx(1000.0)


def test_kdv4_scattering_value_and_anchor():
    """Gamma_A[0] takes the value c(A, 0) at zero frequency; c differs from A at fourth order."""
    cfg = SolveConfig(equation="kdv4", window=16.0)
    z = zero_profile(cfg.grid(), cfg.kappa, EquationKind.KDV4)
    c = scattering_c_4kdv(0.01, z, cfg)
    assert c != 0.01
    assert abs(c - 0.01) < 1e-5
    assert gamma_4kdv(0.01, z, cfg).evaluate(0.0) == pytest.approx(c, abs=1e-6)


def test_mbo_amplitude_is_a_fixed_point_of_theta():
    """The solved amplitude is fixed by theta and Gamma is anchored at c."""
    cfg = SolveConfig(equation="mbo", window=64.0)
    z = zero_profile(cfg.grid(), cfg.kappa, EquationKind.MBO)
    A = solve_amplitude_mbo(0.01, z, cfg)
    assert theta_mbo(A, 0.01, z, cfg) == pytest.approx(A, abs=1e-9)
    assert gamma_mbo(z, 0.01, cfg, A=A).evaluate(0.0) == pytest.approx(0.01, abs=1e-6)


def test_mkdv_gamma_anchor():
    """An imposed c is the zero-frequency value of the mKdV update."""
    cfg = SolveConfig(equation="mkdv", window=16.0)
    z = zero_profile(cfg.grid(), cfg.kappa, EquationKind.MKDV)
    new = gamma_mkdv(0.01, z, cfg, c=0.01)
    assert new.evaluate(0.0) == pytest.approx(0.01, abs=1e-6)
    assert np.all(np.isfinite(new.dz_values))


def test_nls_branch_anchors_and_half_line_updates():
    """S_A + Gamma_A[z] takes c_+- at +-1; a branch update keeps the other half-line."""
    cfg = SolveConfig(equation="nls", window=64.0)
    z = _bump(cfg, 1e-4)
    c_plus, c_minus = c_pm_nls(0.01, z, cfg)
    params = AnsatzParams.build(EquationKind.NLS, 0.01, nls_negative_sign=-1)
    assert check_zero_frequency_anchor(gamma_nls(0.01, z, cfg=cfg), params, c_plus,
                                       c_minus).passed
    right = gamma_nls(0.01, z, branch=1, cfg=cfg)
    assert np.array_equal(right.z_negative, z.z_negative)
    assert not np.array_equal(right.z_values, z.z_values)
    with pytest.raises(ConfigurationError):
        gamma_nls(0.01, z, branch=2, cfg=cfg)


@pytest.mark.slow
@pytest.mark.parametrize("kind", list(EquationKind))
def test_zero_amplitude_is_the_trivial_fixed_point(kind):
    """Zero driving data gives A = 0 and z = 0 after one step."""
    z, params, report = picard_solve(SolveConfig(equation=kind, amplitude=0.0))
    assert params.A == 0
    assert report.iterations == 1
    assert np.allclose(z.z_values, 0.0, atol=1e-14)
    assert report.final_norm.norm_total == pytest.approx(0.0, abs=1e-14)


@pytest.mark.slow
def test_mbo_solve_small_data():
    """A small mBO solve contracts, keeps c and decays on [20, 200]."""
    cfg = SolveConfig(equation="mbo", amplitude=0.02)
    z, params, report = picard_solve(cfg)
    assert report.c_value == 0.02
    assert abs(params.A - 0.02) < 1e-3
    assert params.a == pytest.approx((12 * abs(params.A) ** 2 + 12 * 0.02 ** 2) / (8 * np.pi))
    assert all(r < 1.0 for r in report.contraction_estimates[1:])
    assert "rate_correction" in report.flags
    assert check_zero_frequency_anchor(z, params, 0.02).passed
    assert check_profile_decay(z).passed


@pytest.mark.slow
def test_mkdv_solve_small_data():
    """A small mKdV solve contracts and decays on [20, 200]."""
    cfg = SolveConfig(equation="mkdv", amplitude=0.01)
    z, params, report = picard_solve(cfg)
    assert report.c_value == 0.01
    assert abs(params.A - 0.01) < 1e-3
    assert all(r < 1.0 for r in report.contraction_estimates[1:])
    assert check_zero_frequency_anchor(z, params, 0.01).passed
    assert fixed_point_residual(z, params, cfg) < 1e-6
    assert check_profile_decay(z).passed


@pytest.mark.slow
def test_kdv4_scattering_correction_is_at_least_cubic():
    """log |c(A) - A| grows with slope at least 3 in log |A|."""
    cfg = SolveConfig(equation="kdv4")
    amplitudes = np.array([0.005, 0.01, 0.02])
    gaps = [abs(fixedpoint._solve_remainder_4kdv(A, cfg)[1].c_plus - A) for A in amplitudes]
    slope = np.polyfit(np.log(amplitudes), np.log(gaps), 1)[0]
    assert slope >= 2.9
