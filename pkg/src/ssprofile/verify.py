"""
Numerical checks of the decay laws, asymptotic leading terms and kernel
bounds satisfied by the operators and by converged profiles.

Every check returns a ``Verdict`` that serializes to JSON. "Bounded under
doubling" always compares two octaves: the normalized quantity at the top
octave must not exceed twice its value at the bottom octave.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .ansatz import AnsatzParams, eval_ansatz, eval_ansatz_deriv
from .config import thread_count
from .equations import EquationKind, law_for
from .errors import ConfigurationError
from .oscillatory import (Integrand, QuadratureSpec, ansatz_factor, chi_factor, eval_multilinear,
                          gaussian_factor, low_cutoff, oracle_bruteforce, resonance_data)
from .profile_space import Profile
from .spectral import kernel_K, m_constant, spectral_multilinear

logger = logging.getLogger(__name__)

DOUBLING_FACTOR = 2.0
SLOPE_TOLERANCE = 0.3
PROFILE_SLOPE_TOLERANCE = 0.05
DECAY_WINDOW = (20.0, 200.0)


@dataclass
class Verdict:
    """Outcome of one check."""

    name: str
    passed: bool
    measured: Any
    threshold: Any
    window: Optional[Tuple[float, float]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "measured": _jsonable(self.measured),
            "threshold": _jsonable(self.threshold),
            "window": None if self.window is None else [float(w) for w in self.window],
            "details": _jsonable(self.details),
        }


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares slope of log|f| against log eta."""

    window: Tuple[float, float]
    fitted_exponent: float
    r_squared: float
    samples: int
    notes: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": list(self.window),
            "fitted_exponent": self.fitted_exponent,
            "r_squared": self.r_squared,
            "samples": self.samples,
            "notes": list(self.notes),
        }


def check_decay_exponent(eta, values, window: Optional[Tuple[float, float]] = None) -> SlopeFit:
    """
    Fit the decay exponent of sampled magnitudes.

    Args:
        eta: Sample frequencies (positive)
        values: |f| at ``eta``
        window: Fit window; defaults to the sample range

    Returns:
        SlopeFit whose ``fitted_exponent`` is the slope (negative for decay)

    Raises:
        ConfigurationError: If the window spans less than a factor 4 or fewer
            than 8 usable samples remain
    """
    eta = np.asarray(eta, dtype=float)
    values = np.abs(np.asarray(values))
    lo, hi = window if window is not None else (float(eta.min()), float(eta.max()))
    if hi < 4.0 * lo:
        raise ConfigurationError(f"Slope window [{lo:g}, {hi:g}] spans less than a factor 4")
    inside = (eta >= lo) & (eta <= hi)
    notes = []
    usable = inside & (values > 0) & np.isfinite(values)
    dropped = int(inside.sum() - usable.sum())
    if dropped:
        notes.append(f"excluded {dropped} zero or non-finite samples")
        logger.warning(f"Slope fit on [{lo:g}, {hi:g}] excluded {dropped} samples")
    if usable.sum() < 8:
        raise ConfigurationError(
            f"Slope fit needs at least 8 positive samples in [{lo:g}, {hi:g}], got {usable.sum()}")
    x = np.log(eta[usable])
    y = np.log(values[usable])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    spread = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - np.sum(residual ** 2) / spread if spread > 0 else 1.0
    return SlopeFit((float(lo), float(hi)), float(slope), float(r_squared), int(usable.sum()),
                    tuple(notes))


def _bounded_under_doubling(normalized: Sequence[float]) -> bool:
    return normalized[-1] <= DOUBLING_FACTOR * normalized[0] + 1e-300


# Operator asymptotics


def check_integral_y(etas: Sequence[float] = (20.0, 40.0)) -> Verdict:
    """
    Two-dimensional Fresnel integral over the unit square against (pi/8 eta) e^(i pi/2).

    The integrand factorizes, so each one-dimensional factor is computed with
    ``scipy.integrate.quad`` and squared. The relative error is normalized by
    log^2(eta)/eta.
    """
    normalized, relative, quad_errors = [], [], []
    for eta in etas:
        panels = max(4, int(np.ceil(2.0 * eta / np.pi)))
        breaks = np.linspace(0.0, 1.0, panels + 1)[1:-1]
        value, err = quad(lambda y: np.exp(2j * eta * y ** 2), 0.0, 1.0, complex_func=True,
                          points=breaks, limit=50 * panels, epsabs=1e-14, epsrel=1e-12)
        quad_errors.append(abs(err))
        numeric = value ** 2
        leading = np.pi / (8.0 * eta) * 1j
        rel = abs(numeric - leading) / abs(leading)
        relative.append(rel)
        normalized.append(rel * eta / np.log(eta) ** 2)
    passed = _bounded_under_doubling(normalized)
    return Verdict("integral_y", passed, normalized, f"top <= {DOUBLING_FACTOR:g} x bottom",
                   (min(etas), max(etas)), {"eta": list(etas), "relative_error": relative,
                    "quadrature_error": quad_errors})


def _mbo_window(etas: Sequence[float]) -> float:
    return 2.0 * max(etas) + 4.0


def check_mbo_asymptotics(A: complex, c: float = 0.0, etas: Sequence[float] = (10.0, 20.0, 40.0),
                          resolution: int = 8) -> Verdict:
    """
    Residual of I[S] after removing its two leading terms.

    R = I[S] - 3|A|^2 A pi e^(i a log eta)/eta^(3/2)
          - i pi sqrt(3) A^3 e^(-3ia log 3) e^(2i eta^2/3 + 3ia log eta)/eta^(3/2),
    reported as |R| eta^(7/2)/|A|^3.
    """
    etas = [float(e) for e in etas]
    if min(etas) < 5.0:
        raise ConfigurationError("mBO asymptotics are checked for eta >= 5")
    A = complex(A)
    if A == 0:
        return Verdict("mbo_asymptotics", True, [0.0] * len(etas), "non-increasing",
                       (min(etas), max(etas)), {"eta": etas})
    params = AnsatzParams.build(EquationKind.MBO, A, c)
    factor = ansatz_factor(params)
    result = spectral_multilinear(EquationKind.MBO, [factor] * 3, _mbo_window(etas),
                                  resolution=resolution)
    eta = np.asarray(etas)
    value = result.at(eta)
    a = params.a
    lead = 3.0 * abs(A) ** 2 * A * np.pi * np.exp(1j * a * np.log(eta)) / eta ** 1.5
    second = (1j * np.pi * A ** 3 * np.sqrt(3.0) * np.exp(-3j * a * np.log(3.0))
              * np.exp(2j * eta ** 2 / 3.0 + 3j * a * np.log(eta)) / eta ** 1.5)
    normalized = np.abs(value - lead - second) * eta ** 3.5 / abs(A) ** 3
    passed = _bounded_under_doubling(normalized)
    return Verdict("mbo_asymptotics", passed, normalized.tolist(),
                   f"top <= {DOUBLING_FACTOR:g} x bottom", (min(etas), max(etas)),
                   {"eta": etas, "A": A, "a": a, "values": value.tolist()})


def check_hll_leading(g1=None, etas: Sequence[float] = (15.0, 30.0, 60.0), g2=None, g3=None,
                      resolution: int = 8) -> Verdict:
    """
    High x low x low part of I against pi g1(eta) g2(0) g3(0) / eta^(3/2).

    The region split is separable: the first factor is multiplied by chi(|x|),
    the other two by the unit-interval bump. The difference is reported
    times eta^(5/2), with and without the 1/log^2(eta) normalization.
    """
    g1 = g1 or chi_factor(two_sided=True)
    g2 = g2 or gaussian_factor(width=0.5)
    g3 = g3 or gaussian_factor(width=0.5)
    high = lambda x: g1(x) * (1.0 - low_cutoff(x))
    low2 = lambda x: g2(x) * low_cutoff(x)
    low3 = lambda x: g3(x) * low_cutoff(x)
    result = spectral_multilinear(EquationKind.MBO, [high, low2, low3], _mbo_window(etas),
                                  resolution=resolution)
    eta = np.asarray(etas, dtype=float)
    value = result.at(eta)
    g20 = complex(np.asarray(g2(np.array([0.0])))[0])
    g30 = complex(np.asarray(g3(np.array([0.0])))[0])
    leading = np.pi * np.asarray(g1(eta)) * g20 * g30 / eta ** 1.5
    difference = np.abs(value - leading) * eta ** 2.5
    with_log = difference / np.log(eta) ** 2
    passed = _bounded_under_doubling(with_log)
    return Verdict("hll_leading", passed, with_log.tolist(), f"top <= {DOUBLING_FACTOR:g} x bottom",
                   (min(etas), max(etas)),
                   {"eta": list(etas), "without_log": difference.tolist(),
                    "leading": leading.tolist(), "values": value.tolist()})


def check_K_kernel(zetas: Optional[Sequence[float]] = None, resolution: int = 8) -> Verdict:
    """
    Decay of the cubic kernel: |K(zeta)| <zeta>^2 bounded on [5, 50].

    K' is estimated by centered differences with step 1e-3 <zeta>.
    """
    zetas = np.asarray(zetas if zetas is not None else np.geomspace(5.0, 50.0, 24), dtype=float)
    bracket = np.sqrt(1.0 + zetas ** 2)
    steps = 1e-3 * bracket
    grid = np.concatenate([zetas, zetas + steps, zetas - steps, -zetas])
    values = kernel_K(grid, resolution=resolution)
    n = len(zetas)
    K = values[:n]
    deriv = (values[n:2 * n] - values[2 * n:3 * n]) / (2.0 * steps)
    symmetry = float(np.max(np.abs(values[3 * n:] - np.conj(K)))) if n else 0.0
    normalized = np.abs(K) * bracket ** 2
    half = zetas <= np.sqrt(zetas.min() * zetas.max())
    bottom = float(np.max(normalized[half])) if np.any(half) else 0.0
    top = float(np.max(normalized[~half])) if np.any(~half) else 0.0
    passed = top <= DOUBLING_FACTOR * bottom + 1e-300
    return Verdict("K_kernel", passed, {"bottom": bottom, "top": top},
                   f"top <= {DOUBLING_FACTOR:g} x bottom", (float(zetas.min()), float(zetas.max())),
                   {"zeta": zetas.tolist(), "normalized": normalized.tolist(),
                    "max_abs_derivative": float(np.max(np.abs(deriv))),
                    "conjugate_symmetry_error": symmetry})


def check_M_constant_decay(window: Tuple[float, float] = (10.0, 60.0), samples: int = 32,
                           resolution: int = 8) -> Verdict:
    """Slope of |M[chi, chi, chi, chi]| on ``window`` against -17/6 + 0.3."""
    eta = np.geomspace(window[0], window[1], samples)
    values = m_constant(eta, resolution=resolution)
    fit = check_decay_exponent(eta, np.abs(values), window)
    threshold = -17.0 / 6.0 + SLOPE_TOLERANCE
    return Verdict("M_constant_decay", fit.fitted_exponent <= threshold, fit.fitted_exponent,
                   threshold, window, fit.to_dict())


# Stationary points


def check_stationary_points(kind, eta: float = 1.0, step: float = 1e-6) -> Verdict:
    """
    Confirm that the listed resonances are critical points of the scaled phase.

    Reports phase value, Hessian determinant and signature per point; the
    phase at frequency eta is eta^n times the scaled one.
    """
    law = law_for(kind)
    n = law.dispersion_order
    records = []
    worst = 0.0
    for point in law.stationary_points:
        p = np.asarray(point, dtype=float)
        free = p[:-1]

        def restricted(q):
            return law.scaled_phase(np.append(q, 1.0 - np.sum(q)))

        gradient = np.zeros(len(free))
        for i in range(len(free)):
            e = np.zeros(len(free))
            e[i] = step
            gradient[i] = (restricted(free + e) - restricted(free - e)) / (2.0 * step)
        data = resonance_data(law.kind, p)
        worst = max(worst, float(np.max(np.abs(gradient))))
        records.append({
            "point": p.tolist(),
            "gradient": gradient.tolist(),
            "phase": data["phase"] * eta ** n,
            "determinant": data["determinant"],
            "signature": data["signature"],
        })
    threshold = 1e-6
    return Verdict(f"stationary_points_{law.kind.value}", worst <= threshold, worst, threshold,
                   None, {"points": records, "eta": eta})


# Oracle suite


def oracle_suite() -> List[Tuple[str, Integrand, float, float]]:
    """
    The fixed twelve smooth-factor instances: three per operator.

    Returns:
        ``(label, integrand, eta, radius)`` tuples
    """
    g = gaussian_factor
    suite = []
    for i, eta in enumerate((0.5, 0.8, 1.1)):
        factors = (g(0.1, 0.2), g(-0.05, 0.25, 1.0 + 0.5j), g(0.15, 0.2),
                   g(0.05 * i, 0.22, 1.0, 0.5))
        suite.append((f"M-{i}", Integrand(EquationKind.KDV4, factors), eta, 1.0))
    for i, eta in enumerate((0.7, 1.3, 2.0)):
        factors = (g(0.5, 0.6), g(0.2, 0.5, 0.5 - 0.3j), g(0.1 * i, 0.7, 1.0, -0.5))
        suite.append((f"I-{i}", Integrand(EquationKind.MBO, factors), eta, 3.0))
    for i, eta in enumerate((0.6, 1.2, 1.8)):
        factors = (g(0.6, 0.5), g(-0.4, 0.6, 1.0j), g(0.5, 0.5, 1.0, 0.3 * i))
        suite.append((f"T-{i}", Integrand(EquationKind.NLS, factors), eta, 3.0))
    for i, eta in enumerate((0.4, 0.9, 1.4)):
        factors = (g(0.3, 0.5), g(0.2, 0.45, 0.8), g(0.1 * i, 0.5, 1.0, 0.4))
        suite.append((f"cubic-{i}", Integrand(EquationKind.MKDV, factors), eta, 2.0))
    return suite


def _compare_with_oracle(label: str, integrand: Integrand, eta: float, radius: float,
                         spec: QuadratureSpec, resolution: int) -> Dict[str, Any]:
    started = time.perf_counter()
    panel = eval_multilinear(integrand, eta, spec, radius=radius)
    oracle = oracle_bruteforce(integrand, eta, spec, radius=radius, resolution=resolution)
    elapsed = time.perf_counter() - started
    logger.info(f"Oracle instance {label}: {elapsed:.1f}s")
    allowed = 10.0 * max(spec.rel_tol * abs(oracle), spec.abs_tol)
    return {
        "label": label,
        "eta": eta,
        "panel": complex(panel.truncated_value),
        "oracle": oracle,
        "difference": abs(panel.truncated_value - oracle),
        "allowed": allowed,
        "converged": panel.converged,
        "seconds": elapsed,
    }


def check_oracle_suite(spec: Optional[QuadratureSpec] = None, resolution: int = 32) -> Verdict:
    """
    Panel engine against the brute-force oracle on the twelve-instance suite.

    Instances run concurrently. The M instances use radius 1, which keeps their
    three-axis oracle below two hundred nodes per half-axis.
    """
    spec = spec or QuadratureSpec()
    suite = oracle_suite()
    with ThreadPoolExecutor(max_workers=thread_count()) as executor:
        futures = [executor.submit(_compare_with_oracle, label, integrand, eta, radius, spec,
                                   resolution)
                   for label, integrand, eta, radius in suite]
        rows = [future.result() for future in futures]
    failures = [r["label"] for r in rows if r["difference"] > r["allowed"]]
    worst = max(r["difference"] / r["allowed"] for r in rows)
    return Verdict("oracle_suite", not failures, worst, 1.0, None,
                   {"instances": rows, "failures": failures})


# Converged profiles


def check_fixedpoint_residual(profile: Profile, params: AnsatzParams, cfg) -> float:
    """
    Weighted residual of the differentiated profile equation.

    Returns:
        max over grid nodes inside the window of |z' + S' - K w N[S + z]|
        <xi>^(kappa+1)
    """
    from .fixedpoint import nonlinear_density

    law = cfg.law
    nodes = profile.grid.nodes
    nodes = nodes[nodes <= cfg.window]
    xi = nodes if profile.hermitian else np.concatenate([-nodes[::-1], nodes])
    density = nonlinear_density(params, profile, cfg)
    rhs = law.profile_constant * law.outer_weight(xi) * density(xi)
    lhs = profile.evaluate_deriv(xi) + eval_ansatz_deriv(params, xi)
    weight = np.sqrt(1.0 + xi ** 2) ** (profile.kappa + 1.0)
    return float(np.max(np.abs(lhs - rhs) * weight))


def check_profile_decay(profile: Profile, window: Optional[Tuple[float, float]] = None) -> Verdict:
    """Slopes of |z| and |z'| on [20, 200] against -kappa and -(kappa+1), within 0.05."""
    nodes = profile.grid.nodes
    window = window or DECAY_WINDOW
    kappa = profile.kappa
    value_fit = check_decay_exponent(nodes, np.abs(profile.z_values), window)
    deriv_fit = check_decay_exponent(nodes, np.abs(profile.dz_values), window)
    limits = (-kappa + PROFILE_SLOPE_TOLERANCE, -(kappa + 1.0) + PROFILE_SLOPE_TOLERANCE)
    passed = value_fit.fitted_exponent <= limits[0] and deriv_fit.fitted_exponent <= limits[1]
    return Verdict("profile_decay", passed,
                   [value_fit.fitted_exponent, deriv_fit.fitted_exponent], list(limits), window,
                   {"value_fit": value_fit.to_dict(), "deriv_fit": deriv_fit.to_dict()})


def check_zero_frequency_anchor(profile: Profile, params: AnsatzParams,
                                c_plus: complex, c_minus: Optional[complex] = None,
                                tolerance: float = 1e-6) -> Verdict:
    """
    z(0+) = c for anchored equations; for NLS, S(+-1) + z(+-1) = c_+-.
    """
    if profile.hermitian:
        measured = abs(profile.evaluate(0.0) - c_plus)
    else:
        plus = eval_ansatz(params, 1.0) + profile.evaluate(1.0)
        minus = eval_ansatz(params, -1.0) + profile.evaluate(-1.0)
        measured = max(abs(plus - c_plus), abs(minus - (c_minus or 0j)))
    return Verdict("zero_frequency_anchor", measured <= tolerance, measured, tolerance)


def check_contraction(report, max_ratio: Optional[float] = None,
                      tolerance: Optional[float] = None) -> Verdict:
    """
    Contraction evidence from a SolveReport.

    Ratios d_(n+1)/d_n for n >= 2 must stay below ``max_ratio`` (0.5 for
    quartic KdV, 0.7 otherwise) and the last distance below ``tolerance``.
    """
    kind = EquationKind.parse(report.equation)
    if max_ratio is None:
        max_ratio = 0.5 if kind == EquationKind.KDV4 else 0.7
    tolerance = 1e-8 if tolerance is None else tolerance
    ratios = list(report.contraction_estimates)[1:]
    worst = max(ratios) if ratios else 0.0
    final = report.distances[-1] if report.distances else 0.0
    passed = worst < max_ratio and final <= tolerance
    return Verdict("contraction", passed, {"max_ratio": worst, "final_distance": final},
                   {"max_ratio": max_ratio, "final_distance": tolerance}, None,
                   {"ratios": list(report.contraction_estimates)})


def check_amplitude_linearity(kind, amplitude: complex, cfg=None) -> Verdict:
    """Norm ratio ||z(a/2)|| / ||z(a)|| inside [0.35, 0.65]."""
    from .fixedpoint import SolveConfig, picard_solve

    cfg = cfg or SolveConfig(equation=kind)
    full = picard_solve(cfg.replace(equation=kind, amplitude=amplitude))[2]
    half = picard_solve(cfg.replace(equation=kind, amplitude=complex(amplitude) / 2.0))[2]
    big = full.final_norm.norm_total
    ratio = half.final_norm.norm_total / big if big > 0 else float("nan")
    passed = bool(0.35 <= ratio <= 0.65)
    return Verdict("amplitude_linearity", passed, ratio, [0.35, 0.65], None,
                   {"norm_full": big, "norm_half": half.final_norm.norm_total})


# Runner


OPERATOR_CHECKS: Dict[str, Callable[[], Verdict]] = {
    "integral_y": check_integral_y,
    "mbo_asymptotics": lambda: check_mbo_asymptotics(0.1),
    "hll_leading": check_hll_leading,
    "K_kernel": check_K_kernel,
    "M_constant_decay": check_M_constant_decay,
    "stationary_points": lambda: _all_stationary(),
    "oracle_suite": check_oracle_suite,
}

PROFILE_CHECKS = ("profile_decay", "zero_frequency_anchor", "fixedpoint_residual", "contraction")


def _all_stationary() -> Verdict:
    verdicts = [check_stationary_points(kind) for kind in EquationKind]
    return Verdict("stationary_points", all(v.passed for v in verdicts),
                   max(v.measured for v in verdicts), verdicts[0].threshold, None,
                   {v.name: v.details for v in verdicts})


def run_checks(names: Sequence[str], solution=None) -> List[Verdict]:
    """
    Run named checks concurrently, returning verdicts in request order.

    Args:
        names: Entries of OPERATOR_CHECKS or PROFILE_CHECKS
        solution: ``(profile, params, cfg, report)`` for profile checks

    Raises:
        ConfigurationError: On unknown names or a profile check without a solution
    """
    unknown = [n for n in names if n not in OPERATOR_CHECKS and n not in PROFILE_CHECKS]
    if unknown:
        known = ", ".join(sorted(OPERATOR_CHECKS) + list(PROFILE_CHECKS))
        raise ConfigurationError(f"Unknown checks: {', '.join(unknown)} (known: {known})")
    if solution is None and any(n in PROFILE_CHECKS for n in names):
        raise ConfigurationError("Profile checks need a stored profile (--profile)")

    def run(name):
        if name in OPERATOR_CHECKS:
            return OPERATOR_CHECKS[name]()
        profile, params, cfg, report = solution
        if name == "profile_decay":
            return check_profile_decay(profile)
        if name == "zero_frequency_anchor":
            return check_zero_frequency_anchor(profile, params, report.c_value, report.c_minus)
        if name == "fixedpoint_residual":
            residual = check_fixedpoint_residual(profile, params, cfg)
            norm = report.final_norm.norm_total
            threshold = 10.0 * cfg.picard_tol * (1.0 + norm)
            return Verdict(name, residual <= threshold, residual, threshold)
        return check_contraction(report, tolerance=cfg.picard_tol)

    logger.info(f"Running checks: {', '.join(names)}")
    with ThreadPoolExecutor(max_workers=thread_count()) as executor:
        futures = [executor.submit(run, name) for name in names]
        verdicts = [future.result() for future in futures]
    for v in verdicts:
        logger.info(f"{v.name}: {'pass' if v.passed else 'FAIL'} (measured {v.measured})")
    return verdicts
