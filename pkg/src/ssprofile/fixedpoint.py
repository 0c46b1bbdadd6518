"""
Fixed-point maps and the Picard driver for the self-similar profiles.

Every map is read off the differentiated profile equation

    W'(eta) = K * w(eta) * N[W](eta),   W = S_A + z,

through the residual density r = K w N[W] - S_A'. The remainder is rebuilt
from r by the direct form z(xi) = c + int_0^xi r for xi <= 1 and by the tail
form z(xi) = -int_xi^inf r beyond, where the integral past the window is
closed by a power law with the profile's decay exponent. The
data-to-scattering value is c(A, z) = -int_0^inf r. NLS replaces the anchor
0 by +-1 and removes the logarithmic singularity of T/eta at 0 analytically.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .ansatz import AnsatzParams, eval_ansatz, eval_ansatz_deriv
from .config import DEFAULT_CONFIG
from .equations import EquationKind, law_for, validate_kappa
from .errors import ConfigurationError, NonConvergenceError, NumericalOverflowError
from .oscillatory import Integrand, QuadratureSpec, evaluate_many, profile_factor
from .profile_space import (FrequencyGrid, NormReport, Profile, build_grid, fit_tail,
                            profile_norm, zero_profile)
from .spectral import spectral_multilinear

logger = logging.getLogger(__name__)

BACKENDS = ("spectral", "panel")

# Factors are sampled on [-WINDOW_MARGIN * R, WINDOW_MARGIN * R] for a window
# ending at R, so the taper never touches frequencies where N is used.
WINDOW_MARGIN = 1.5

DEFAULT_FAR_CUT = 1e3


def _parse_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigurationError(f"Complex values are [re, im] pairs, got {value}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError as e:
            raise ConfigurationError(f"Cannot parse complex value '{value}'") from e
    return complex(value)


@dataclass(frozen=True)
class SolveConfig:
    """
    Settings of one fixed-point solve.

    ``amplitude`` is the driving parameter: the zero-frequency value c for
    mKdV, quartic KdV and mBO, the high-frequency amplitude A for NLS.
    ``kappa`` and ``window`` of None take the equation's defaults. The
    nonlinearity is computed up to ``window``; the stored grid runs to
    ``far_cut`` and its nodes beyond the window follow the fitted tail model.
    """

    equation: EquationKind = EquationKind.KDV4
    kappa: Optional[float] = None
    amplitude: complex = 0j
    picard_tol: float = 1e-8
    max_iters: int = 40
    damping: float = 1.0
    backend: str = "spectral"
    window: Optional[float] = None
    far_cut: Optional[float] = None
    nodes_per_decade: int = 32
    near_zero_cut: float = 1e-3
    inner_tol: float = 1e-10
    max_inner_iters: int = 60
    inversion_tol: float = 1e-8
    max_inversion_steps: int = 20
    smallness: float = 0.1
    mkdv_sign: int = 1
    distance_delta: float = 0.02
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        object.__setattr__(self, "equation", EquationKind.parse(self.equation))
        law = law_for(self.equation, self.mkdv_sign)
        object.__setattr__(self, "amplitude", _parse_complex(self.amplitude))
        kappa = law.kappa_default if self.kappa is None else float(self.kappa)
        object.__setattr__(self, "kappa", validate_kappa(self.equation, kappa))
        window = law.default_window if self.window is None else float(self.window)
        if window <= 1.0:
            raise ConfigurationError(f"window must exceed 1, got {window}")
        object.__setattr__(self, "window", window)
        far_cut = max(DEFAULT_FAR_CUT, window) if self.far_cut is None else float(self.far_cut)
        if far_cut < window:
            raise ConfigurationError(f"far_cut ({far_cut}) must be at least the window ({window})")
        object.__setattr__(self, "far_cut", far_cut)
        if self.equation == EquationKind.MBO and self.amplitude.imag != 0:
            raise ConfigurationError("The mBO zero-frequency value c must be real")
        if not (0 < self.damping <= 1):
            raise ConfigurationError(f"damping must lie in (0, 1], got {self.damping}")
        if self.picard_tol <= 0 or self.inner_tol <= 0 or self.inversion_tol <= 0:
            raise ConfigurationError("Tolerances must be positive")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.backend not in BACKENDS:
            raise ConfigurationError(
                f"Unknown backend '{self.backend}' (expected one of: {', '.join(BACKENDS)})")

    @property
    def law(self):
        return law_for(self.equation, self.mkdv_sign)

    @property
    def distance_kappa(self) -> float:
        """Weight of the iterate-distance norm (kappa - delta for mBO)."""
        if self.equation == EquationKind.MBO:
            return self.kappa - self.distance_delta
        return self.kappa

    def grid(self) -> FrequencyGrid:
        return build_grid(near_zero_cut=self.near_zero_cut, far_cut=self.far_cut,
                          nodes_per_decade=self.nodes_per_decade)

    def replace(self, **changes) -> "SolveConfig":
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update(changes)
        return SolveConfig(**values)

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> "SolveConfig":
        """Build from a merged configuration (``solver`` and ``quadrature`` sections)."""
        solver = dict(DEFAULT_CONFIG["solver"])
        solver.update(config.get("solver", {}))
        quadrature = dict(DEFAULT_CONFIG["quadrature"])
        quadrature.update(config.get("quadrature", {}))
        return cls(quadrature=QuadratureSpec.from_dict(quadrature),
                   **{k: v for k, v in solver.items() if k in cls.__dataclass_fields__})

    def to_dict(self) -> Dict[str, Any]:
        values = {name: getattr(self, name) for name in self.__dataclass_fields__
                  if name != "quadrature"}
        values["equation"] = self.equation.value
        values["amplitude"] = [self.amplitude.real, self.amplitude.imag]
        values["quadrature"] = {name: getattr(self.quadrature, name)
                                for name in self.quadrature.__dataclass_fields__}
        return values


@dataclass
class SolveReport:
    """Iteration history and summary of a converged solve."""

    equation: EquationKind
    iterations: int
    distances: List[float]
    contraction_estimates: List[float]
    final_norm: NormReport
    c_value: complex
    A_value: complex
    a_value: Optional[float] = None
    B_value: Optional[complex] = None
    c_minus: Optional[complex] = None
    residual: float = 0.0
    flags: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        def pair(value):
            return None if value is None else [value.real, value.imag]

        return {
            "equation": self.equation.value,
            "iterations": self.iterations,
            "distances": list(self.distances),
            "contraction_estimates": list(self.contraction_estimates),
            "final_norm": self.final_norm.to_dict(),
            "c_value": pair(self.c_value),
            "A_value": pair(self.A_value),
            "a_value": self.a_value,
            "B_value": pair(self.B_value),
            "c_minus": pair(self.c_minus),
            "residual": self.residual,
            "flags": dict(self.flags),
        }

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "SolveReport":
        def pair(value):
            return None if value is None else _parse_complex(value)

        return cls(equation=EquationKind.parse(values["equation"]),
                   iterations=int(values["iterations"]),
                   distances=[float(d) for d in values["distances"]],
                   contraction_estimates=[float(r) for r in values["contraction_estimates"]],
                   final_norm=NormReport.from_dict(values["final_norm"]),
                   c_value=pair(values["c_value"]), A_value=pair(values["A_value"]),
                   a_value=values.get("a_value"), B_value=pair(values.get("B_value")),
                   c_minus=pair(values.get("c_minus")),
                   residual=float(values.get("residual", 0.0)),
                   flags=dict(values.get("flags") or {}))


def contraction_ratios(distances: List[float]) -> List[float]:
    """Ratios d_(n+1)/d_n of successive iterate distances."""
    return [b / a for a, b in zip(distances[:-1], distances[1:]) if a > 0]


# Nonlinear densities


@dataclass
class _Density:
    """N[W] sampled on one half-line, ordered by increasing |eta|."""

    s: np.ndarray
    values: np.ndarray
    unconverged: int = 0


def _nonlinear_densities(params: AnsatzParams, z: Profile, cfg: SolveConfig
                         ) -> Tuple[_Density, Optional[_Density], complex]:
    """
    Evaluate N[S_A + z] on [0, R] (and on [-R, 0] for NLS).

    Returns:
        ``(positive, negative, N(0))``; ``negative`` is None for Hermitian
        equations
    """
    law = cfg.law
    R = cfg.window
    two_sided = not law.hermitian
    factor = profile_factor(z, params)

    if cfg.backend == "spectral":
        result = spectral_multilinear(cfg.equation, [factor] * law.nonlinearity_degree,
                                      WINDOW_MARGIN * R, mkdv_sign=cfg.mkdv_sign,
                                      resolution=cfg.quadrature.oscillation_resolution,
                                      taper_fraction=cfg.quadrature.taper_fraction)
        inside = result.restrict(-R, R)
        eta, values = inside.eta, inside.values
        zero = int(np.argmin(np.abs(eta)))
        pos = _Density(eta[zero:], values[zero:])
        neg = _Density(-eta[:zero + 1][::-1], values[:zero + 1][::-1]) if two_sided else None
        return pos, neg, complex(values[zero])

    # panel backend: the grid nodes inside the window are the samples
    nodes = np.concatenate([[0.0], _computed_nodes(z, R)])
    targets = np.concatenate([-nodes[:0:-1], nodes]) if two_sided else nodes
    spec = cfg.quadrature
    integrand = Integrand(cfg.equation, (factor,) * law.nonlinearity_degree,
                          mkdv_sign=cfg.mkdv_sign)
    results = evaluate_many(integrand, targets, spec, radius=WINDOW_MARGIN * R)
    values = np.array([complex(r) for r in results])
    unconverged = sum(not r.converged for r in results)
    if two_sided:
        m = len(nodes) - 1
        pos = _Density(nodes, values[m:], unconverged)
        neg = _Density(nodes, values[:m + 1][::-1], unconverged)
        return pos, neg, complex(values[m])
    return _Density(nodes, values, unconverged), None, complex(values[0])


def nonlinear_density(params: AnsatzParams, z: Profile, cfg: SolveConfig):
    """
    N[S_A + z] as a vectorized callable.

    Defined on [0, R] for Hermitian equations and on [-R, R] for NLS.
    """
    pos, neg, _ = _nonlinear_densities(params, z, cfg)
    s, values = pos.s, pos.values
    if neg is not None:
        s = np.concatenate([-neg.s[:0:-1], pos.s])
        values = np.concatenate([neg.values[:0:-1], pos.values])
    return _spline(s, values)


def _cumulative(y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Cumulative Simpson integral of complex samples from s[0]."""
    return (cumulative_simpson(y.real, x=s, initial=0.0)
            + 1j * cumulative_simpson(y.imag, x=s, initial=0.0))


def tail_closure(s: np.ndarray, r: np.ndarray, R: float, decay: float) -> complex:
    """
    Integral of r beyond R under the model r(s) = gamma * s**(-1-decay).

    gamma is the least-squares fit of the samples in [R/4, 3R/4]; the
    closure is linear in r.
    """
    window = (s >= R / 4.0) & (s <= 3.0 * R / 4.0)
    if window.sum() < 2:
        return 0j
    basis = s[window] ** (-1.0 - decay)
    gamma = np.dot(basis, r[window]) / np.dot(basis, basis)
    return complex(gamma * R ** (-decay) / decay)


def log_phase_residual(s: np.ndarray, r: np.ndarray, R: float, decay: float,
                       rate: complex) -> complex:
    """
    Coefficient gamma of gamma * exp(i rate log s) / s in r.

    Fitted on [4, 3R/4] jointly with the integrable power law s**(-1-decay);
    zero when the window holds too few samples or the rate vanishes.
    """
    window = (s >= 4.0) & (s <= 3.0 * R / 4.0)
    if window.sum() < 4 or rate == 0:
        return 0j
    x = s[window]
    basis = np.column_stack([np.exp(1j * rate * np.log(x)) / x, x ** (-1.0 - decay)])
    coefficients = np.linalg.lstsq(basis.astype(complex), r[window], rcond=None)[0]
    return complex(coefficients[0])


def _spline(s: np.ndarray, values: np.ndarray):
    re = CubicSpline(s, values.real)
    im = CubicSpline(s, values.imag)
    return lambda x: re(x) + 1j * im(x)


@dataclass
class ProfileUpdate:
    """One application of the profile map: the new remainder and its anchors."""

    profile: Profile
    c_plus: complex
    c_minus: Optional[complex] = None
    unconverged: int = 0
    log_residual: complex = 0j


def _computed_nodes(z: Profile, R: float) -> np.ndarray:
    nodes = z.grid.nodes
    return nodes[nodes <= R * (1.0 + 1e-12)]


def _extend_beyond_window(z: Profile, z_nodes: np.ndarray, dz_nodes: np.ndarray,
                          sign: float) -> Tuple[np.ndarray, np.ndarray]:
    """Fill the grid nodes past the window with the tail fitted on its last decade."""
    nodes = z.grid.nodes
    m = len(z_nodes)
    if m == len(nodes):
        return z_nodes, dz_nodes
    p, C = fit_tail(nodes[:m], z_nodes, z.kappa)
    s = nodes[m:]
    value = C * s ** (-p)
    return (np.concatenate([z_nodes, value]),
            np.concatenate([dz_nodes, -p * value / (sign * s)]))


def _branch(params: AnsatzParams, z: Profile, density: _Density, sign: float,
            cfg: SolveConfig, anchor_value: Optional[complex], n_zero: complex):
    """
    Rebuild one half-line of the remainder from its density.

    For anchor 0 the direct form z = c + int_0^xi r is used on xi <= 1;
    ``anchor_value`` of None means c is the computed c(A, z). NLS uses the
    anchor +-1 with c_+- = A - int_(+-1)^(+-inf) r. Nodes past the window
    take the fitted tail model.

    Returns:
        ``(z_nodes, dz_nodes, anchor, log_residual)`` with z'(sign * xi) at
        the nodes; ``log_residual`` is the 1/eta log-phase coefficient left in
        r by the mBO and mKdV ansatz
    """
    law = cfg.law
    K = law.profile_constant
    R = cfg.window
    s = density.s
    eta = sign * s
    N = density.values
    nodes = _computed_nodes(z, R)

    if law.anchor == 0.0:
        r = K * law.outer_weight(eta) * N - eval_ansatz_deriv(params, eta)
        _check_density(eta, r)
        residual = 0j
        if law.kind in (EquationKind.MBO, EquationKind.MKDV):
            residual = log_phase_residual(s, r, R, z.kappa, params.leading_rate)
        cumulative = _cumulative(r, s)
        tau = tail_closure(s, r, R, z.kappa)
        # sign * int_0^xi r(eta) d eta, integrated in |eta|
        total = sign * cumulative[-1] + sign * tau
        c = -total if anchor_value is None else anchor_value
        along = _spline(s, sign * cumulative)(nodes)
        r_nodes = _spline(s, r)(nodes)
        direct = c + along
        tail = along - total
        z_nodes = np.where(nodes <= 1.0, direct, tail)
        z_nodes, r_nodes = _extend_beyond_window(z, z_nodes, r_nodes, sign)
        return z_nodes, r_nodes, -total, residual

    # NLS: T/eta with the logarithmic part integrated analytically
    with np.errstate(divide="ignore", invalid="ignore"):
        full = K * N / eta - eval_ansatz_deriv(params, eta)
        regular = K * (N - n_zero) / eta
    h = s[1] - s[0] if len(s) > 1 else 1.0
    regular[0] = K * (N[1] - n_zero) / (sign * h) if len(s) > 1 else 0.0
    low = s <= 1.0 + 1e-9
    high = s >= 1.0 - 1e-9
    _check_density(eta[1:], full[1:])

    g_low = _cumulative(regular[low], s[low])
    s_high = s[high]
    r_high = full[high]
    g_high = _cumulative(r_high, s_high)
    tau = tail_closure(s_high, r_high, R, z.kappa)
    beyond_one = sign * (g_high[-1] + tau)  # int from sign*1 to sign*inf of r
    A = params.A
    c = A - beyond_one

    regular_spline = _spline(s[low], regular[low])
    low_spline = _spline(s[low], g_low)
    high_spline = _spline(s_high, g_high)
    full_spline = _spline(s_high, r_high)

    z_nodes = np.zeros(len(nodes), dtype=complex)
    dz_nodes = np.zeros(len(nodes), dtype=complex)
    inner = nodes <= 1.0
    x = nodes[inner]
    # int_(sign*1)^(sign*x) K T/eta = sign*(G(x) - G(1)) + K T(0) log x
    log_part = K * n_zero * np.log(x)
    z_nodes[inner] = (c - eval_ansatz(params, sign * x)
                      + sign * (low_spline(x) - g_low[-1]) + log_part)
    dz_nodes[inner] = regular_spline(x) + K * n_zero / (sign * x) - eval_ansatz_deriv(
        params, sign * x)
    outer = ~inner
    x = nodes[outer]
    z_nodes[outer] = sign * (high_spline(x) - g_high[-1]) - sign * tau
    dz_nodes[outer] = full_spline(x)
    z_nodes, dz_nodes = _extend_beyond_window(z, z_nodes, dz_nodes, sign)
    return z_nodes, dz_nodes, c, 0j


def _check_density(eta: np.ndarray, values: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise NumericalOverflowError("Non-finite nonlinear density",
                                     node=float(eta[np.argmax(bad)]))


def apply_profile_map(params: AnsatzParams, z: Profile, cfg: SolveConfig,
                      c: Optional[complex] = None) -> ProfileUpdate:
    """
    One evaluation of the profile map for any equation.

    Args:
        params: Ansatz of the current iterate
        z: Current remainder
        cfg: Solver settings (backend, window, quadrature)
        c: Zero-frequency value imposed in the direct form; None uses the
            computed c(A, z)

    Returns:
        ProfileUpdate with the new remainder, c(A, z) (c_+- for NLS) and the
        log-phase residual of the mBO and mKdV density
    """
    pos, neg, n_zero = _nonlinear_densities(params, z, cfg)
    z_pos, dz_pos, c_plus, residual = _branch(params, z, pos, 1.0, cfg, c, n_zero)
    if neg is None:
        profile = z.replace(z_pos, dz_pos)
        return ProfileUpdate(profile, c_plus, unconverged=pos.unconverged,
                             log_residual=residual)
    z_neg, dz_neg, c_minus, _ = _branch(params, z, neg, -1.0, cfg, c, n_zero)
    profile = z.replace(z_pos, dz_pos, z_neg, dz_neg)
    return ProfileUpdate(profile, c_plus, c_minus, unconverged=pos.unconverged)


def _default_cfg(kind, cfg: Optional[SolveConfig]) -> SolveConfig:
    if cfg is None:
        return SolveConfig(equation=kind)
    if cfg.equation != EquationKind.parse(kind):
        return cfg.replace(equation=kind, kappa=None, window=None)
    return cfg


# Quartic KdV


def _kdv4_params(A: complex) -> AnsatzParams:
    return AnsatzParams.build(EquationKind.KDV4, A)


def scattering_c_4kdv(A: complex, z: Profile, cfg: Optional[SolveConfig] = None) -> complex:
    """
    Data-to-scattering map c(A, z) = A - K int_0^inf |eta|^(1/3) M[S_A + z].

    Args:
        A: High-frequency amplitude
        z: Remainder
        cfg: Solver settings

    Returns:
        The zero-frequency value c
    """
    cfg = _default_cfg(EquationKind.KDV4, cfg)
    return apply_profile_map(_kdv4_params(A), z, cfg).c_plus


def gamma_4kdv(A: complex, z: Profile, cfg: Optional[SolveConfig] = None) -> Profile:
    """Gamma_A[z], anchored at c(A, z); Hermitian extension to xi < 0."""
    cfg = _default_cfg(EquationKind.KDV4, cfg)
    return apply_profile_map(_kdv4_params(A), z, cfg).profile


def _picard(step, z0: Profile, cfg: SolveConfig, label: str):
    """
    Damped iteration z <- (1 - damping) z + damping Gamma[z].

    ``step`` maps z to a ProfileUpdate. Returns the last iterate, its update
    and the distance history.
    """
    z = z0
    distances: List[float] = []
    for iteration in range(1, cfg.max_iters + 1):
        update = step(z)
        new = update.profile if cfg.damping == 1.0 else z.combine(
            update.profile, 1.0 - cfg.damping, cfg.damping)
        distance = profile_norm(new.combine(z, 1.0, -1.0), cfg.distance_kappa).norm_total
        distances.append(distance)
        logger.debug(f"{label} iteration {iteration}: distance {distance:.3e}")
        z = new
        if distance <= cfg.picard_tol:
            return z, update, distances
    raise NonConvergenceError(
        f"{label} did not converge in {cfg.max_iters} iterations "
        f"(last distance {distances[-1]:.3e}); reduce the amplitude or increase damping",
        distances)


def _solve_remainder_4kdv(A: complex, cfg: SolveConfig, z0: Optional[Profile] = None):
    z0 = z0 or zero_profile(cfg.grid(), cfg.kappa, EquationKind.KDV4)
    params = _kdv4_params(A)
    return _picard(lambda z: apply_profile_map(params, z, cfg), z0, cfg, "4KdV remainder")


def invert_c_4kdv(c: complex, cfg: Optional[SolveConfig] = None) -> complex:
    """
    Find A with c(A, z_A) = c.

    Damped successive substitution A <- A - (c(A, z_A) - c) from A = c,
    with a warm-started inner Picard solve for z_A at every step.

    Args:
        c: Target zero-frequency value
        cfg: Solver settings (``inversion_tol``, ``max_inversion_steps``)

    Returns:
        The amplitude A

    Raises:
        NonConvergenceError: When |c(A) - c| stays above the tolerance
    """
    return _invert_c_4kdv(c, _default_cfg(EquationKind.KDV4, cfg))[0]


def _invert_c_4kdv(c: complex, cfg: SolveConfig):
    """
    Returns ``(A, mismatch history, remainder solve)``; the remainder solve is
    the ``_picard`` result at the returned A, or None when c = 0.
    """
    c = complex(c)
    if c == 0:
        return 0j, [], None
    A = c
    z = None
    history: List[float] = []
    for step in range(1, cfg.max_inversion_steps + 1):
        solution = _solve_remainder_4kdv(A, cfg, z)
        z, update, _ = solution
        mismatch = update.c_plus - c
        history.append(abs(mismatch))
        logger.debug(f"4KdV inversion step {step}: A={A:.6g}, |c(A) - c|={abs(mismatch):.3e}")
        if abs(mismatch) <= cfg.inversion_tol:
            return A, history, solution
        A = A - cfg.damping * mismatch
    raise NonConvergenceError(
        f"Inversion of c(A) did not converge in {cfg.max_inversion_steps} steps "
        f"(|c(A) - c| = {history[-1]:.3e}); try a smaller |c|", history)


# mBO and mKdV: A solved from (c, z)


def _cubic_params(kind: EquationKind, A: complex, c: complex, cfg: SolveConfig,
                  rate_correction: complex = 0j) -> AnsatzParams:
    if kind == EquationKind.MBO:
        return AnsatzParams.build(kind, A, c, rate_correction=rate_correction)
    return AnsatzParams.build(kind, A, c, mkdv_sign=cfg.mkdv_sign,
                              rate_correction=rate_correction)


def theta_mbo(A: complex, c: float, z: Profile, cfg: Optional[SolveConfig] = None) -> complex:
    """
    One application of A -> A + c - c(A, z), with (a, B) refreshed from A.

    The fixed point is the amplitude A(c, z) for which the remainder built
    from S_(A,a,B) + z takes the value c at zero frequency.
    """
    cfg = _default_cfg(EquationKind.MBO, cfg)
    params = _cubic_params(EquationKind.MBO, A, c, cfg)
    return complex(A) + c - apply_profile_map(params, z, cfg).c_plus


def _solve_amplitude(kind: EquationKind, c: complex, z: Profile, cfg: SolveConfig,
                     A0: Optional[complex] = None, rate_correction: complex = 0j
                     ) -> Tuple[complex, List[float]]:
    """Iterate the amplitude map to ``inner_tol`` at fixed z."""
    A = complex(c) if A0 is None else complex(A0)
    steps: List[float] = []
    for _ in range(cfg.max_inner_iters):
        params = _cubic_params(kind, A, c, cfg, rate_correction)
        new = A + c - apply_profile_map(params, z, cfg).c_plus
        steps.append(abs(new - A))
        A = new
        if steps[-1] <= cfg.inner_tol:
            return A, steps
    raise NonConvergenceError(
        f"Amplitude map for {kind.value} did not converge in {cfg.max_inner_iters} steps", steps)


def solve_amplitude_mbo(c: float, z: Profile, cfg: Optional[SolveConfig] = None,
                        A0: Optional[complex] = None) -> complex:
    """The amplitude A(c, z) as the limit of the theta_mbo iteration from A = c."""
    cfg = _default_cfg(EquationKind.MBO, cfg)
    return _solve_amplitude(EquationKind.MBO, c, z, cfg, A0)[0]


def gamma_mbo(z: Profile, c: float, cfg: Optional[SolveConfig] = None,
              A: Optional[complex] = None) -> Profile:
    """
    Gamma[z] for mBO: direct form anchored at c on (0, 1], tail form beyond.

    Args:
        z: Remainder
        c: Zero-frequency value (real)
        cfg: Solver settings
        A: Amplitude; solved from (c, z) when omitted
    """
    cfg = _default_cfg(EquationKind.MBO, cfg)
    if A is None:
        A = solve_amplitude_mbo(c, z, cfg)
    params = _cubic_params(EquationKind.MBO, A, c, cfg)
    return apply_profile_map(params, z, cfg, c=c).profile


def gamma_mkdv(A: complex, z: Profile, cfg: Optional[SolveConfig] = None,
               c: Optional[complex] = None) -> Profile:
    """Gamma[z] for mKdV; anchored at ``c`` when given, otherwise at c(A, z)."""
    cfg = _default_cfg(EquationKind.MKDV, cfg)
    params = _cubic_params(EquationKind.MKDV, A, 0j if c is None else c, cfg)
    return apply_profile_map(params, z, cfg, c=c).profile


# NLS


def _nls_params(A: complex) -> AnsatzParams:
    return AnsatzParams.build(EquationKind.NLS, A, nls_negative_sign=-1)


def c_pm_nls(A: complex, z: Profile, cfg: Optional[SolveConfig] = None) -> Tuple[complex, complex]:
    """The branch anchors (c_+, c_-) = values of S_A + z at +1 and -1."""
    cfg = _default_cfg(EquationKind.NLS, cfg)
    update = apply_profile_map(_nls_params(A), z, cfg)
    return update.c_plus, update.c_minus


def gamma_nls(A: complex, z: Profile, branch: Optional[int] = None,
              cfg: Optional[SolveConfig] = None) -> Profile:
    """
    Gamma_A[z] for NLS on both half-lines.

    Args:
        A: High-frequency amplitude
        z: Remainder
        branch: +1 or -1 keeps only that half-line of the update (the other
            keeps z's samples); None updates both
        cfg: Solver settings
    """
    cfg = _default_cfg(EquationKind.NLS, cfg)
    new = apply_profile_map(_nls_params(A), z, cfg).profile
    if branch is None:
        return new
    if branch not in (1, -1):
        raise ConfigurationError(f"branch must be +1 or -1, got {branch}")
    if branch == 1:
        return z.replace(new.z_values, new.dz_values, z.z_negative, z.dz_negative)
    return z.replace(z.z_values, z.dz_values, new.z_negative, new.dz_negative)


# Driver


def picard_solve(cfg: SolveConfig) -> Tuple[Profile, AnsatzParams, SolveReport]:
    """
    Solve the profile equation of ``cfg.equation`` by Picard iteration from z = 0.

    Quartic KdV first inverts c -> A; mBO and mKdV re-solve A(c, z) before
    every outer step; NLS iterates Gamma_A directly.

    Args:
        cfg: Solver settings

    Returns:
        ``(profile, ansatz parameters, report)``

    Raises:
        ConfigurationError: If the amplitude exceeds ``cfg.smallness``
        NonConvergenceError: If an iteration exceeds its step budget
    """
    kind = cfg.equation
    amplitude = cfg.amplitude
    if abs(amplitude) > cfg.smallness:
        raise ConfigurationError(
            f"|amplitude|={abs(amplitude):.3g} exceeds the small-data threshold "
            f"{cfg.smallness:.3g}")
    grid = cfg.grid()
    z0 = zero_profile(grid, cfg.kappa, kind)
    flags: Dict[str, Any] = {"backend": cfg.backend, "window": cfg.window}
    logger.info(f"Solving {kind.value} with amplitude {amplitude:.6g}, kappa={cfg.kappa}, "
                f"{len(grid)} nodes up to {cfg.window:g}")

    if kind == EquationKind.KDV4:
        A, history, solution = _invert_c_4kdv(amplitude, cfg)
        flags["inversion_residuals"] = history
        z, update, distances = solution or _solve_remainder_4kdv(A, cfg)
        params = _kdv4_params(A)
        c_value = update.c_plus
    elif kind in (EquationKind.MBO, EquationKind.MKDV):
        c = amplitude.real if kind == EquationKind.MBO else amplitude
        state = {"A": complex(c), "inner": [], "rate": 0j}

        def step(z):
            A, steps = _solve_amplitude(kind, c, z, cfg, state["A"], state["rate"])
            state["A"] = A
            state["inner"].append(len(steps))
            update = apply_profile_map(_cubic_params(kind, A, c, cfg, state["rate"]), z, cfg,
                                       c=c)
            # the 1/eta log-phase part of r moves into the leading term's rate
            if A != 0:
                state["rate"] += update.log_residual / (1j * A)
            return update

        z, update, distances = _picard(step, z0, cfg, f"{kind.value} remainder")
        params = _cubic_params(kind, state["A"], c, cfg, state["rate"])
        flags["amplitude_steps"] = state["inner"]
        flags["rate_correction"] = [state["rate"].real, state["rate"].imag]
        c_value = complex(c)
    else:
        params = _nls_params(amplitude)
        z, update, distances = _picard(lambda z: apply_profile_map(params, z, cfg), z0, cfg,
                                       "NLS remainder")
        c_value = update.c_plus

    if update.unconverged:
        flags["unconverged_panels"] = update.unconverged
    report = SolveReport(
        equation=kind,
        iterations=len(distances),
        distances=distances,
        contraction_estimates=contraction_ratios(distances),
        final_norm=profile_norm(z, cfg.kappa),
        c_value=complex(c_value),
        A_value=params.A,
        a_value=params.a if kind == EquationKind.MBO else None,
        B_value=params.B if kind == EquationKind.MBO else None,
        c_minus=update.c_minus,
        residual=distances[-1],
        flags=flags,
    )
    logger.info(f"Converged in {report.iterations} iterations: "
                f"norm {report.final_norm.norm_total:.3e}, A={params.A:.6g}")
    return z, params, report


def fixed_point_residual(profile: Profile, params: AnsatzParams, cfg: SolveConfig) -> float:
    """Norm of Gamma[z] - z for a stored solution."""
    kind = cfg.equation
    c = None
    if kind in (EquationKind.MBO, EquationKind.MKDV):
        c = params.c if kind == EquationKind.MKDV else params.c.real
    update = apply_profile_map(params, profile, cfg, c=c)
    diff = update.profile.combine(profile, 1.0, -1.0)
    return profile_norm(diff, cfg.distance_kappa).norm_total
