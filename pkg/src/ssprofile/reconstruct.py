"""
Physical-space profiles, self-similar fields and the evolution cross-check.

The Fourier transform of a profile is rebuilt from the ansatz and the
remainder by inverting the modulation,

    P_hat(xi) = exp(i sd P(xi)) |xi|^(-p) (S_A + z)(xi),

with sd = -1 for mBO and +1 otherwise. The physical profile is the inverse
Fourier integral of P_hat, truncated smoothly beyond the stationary
frequencies of the requested x range. The cross-check samples the
self-similar field on a periodic window, evolves it with a Strang split-step
integrator and compares with the exactly rescaled field.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.fft import fft, fftfreq, ifft

from .ansatz import AnsatzParams, eval_ansatz
from .config import DEFAULT_CONFIG, thread_count
from .equations import EquationKind, law_for, selfsimilar_exponents
from .errors import ConfigurationError, NumericalOverflowError
from .oscillatory import QuadratureSpec, taper
from .profile_space import Profile
from .quadrature import axis_rule, panel_count, segment_rule

logger = logging.getLogger(__name__)

# Complex exponentials held in memory per synthesis chunk.
CHUNK_BUDGET = 1 << 21
# Largest time step accepted by the cross-check.
MAX_CROSSCHECK_DT = 0.2
# Fraction of the Nyquist frequency kept untouched by the spectral taper.
SPECTRAL_TAPER_FRACTION = 0.6
# Modes above this fraction of Nyquist are removed from the nonlinear term.
DEALIASING_RATIO = 2.0 / 3.0
# Stability bound of the classical Runge-Kutta step on the imaginary axis.
RK4_STABILITY = 2.5

# Nonlinear term of each PDE in physical space: (power of u, coefficient of
# d/dx (u^power)) for the derivative nonlinearities.
DERIVATIVE_TERMS = {
    EquationKind.KDV4: (4, -1.0),
    EquationKind.MKDV: (3, -1.0),
    EquationKind.MBO: (3, 1.0),
}


@dataclass(frozen=True)
class ReconstructConfig:
    """Settings of the physical-space synthesis and the evolution cross-check."""

    x_max: float = 50.0
    x_nodes: int = 401
    synthesis_cut: Optional[float] = None
    synthesis_tol: float = 1e-6
    crosscheck_window: float = 400.0
    crosscheck_modes: int = 8192
    crosscheck_steps: int = 200
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if self.x_max <= 0:
            raise ConfigurationError(f"x_max must be positive, got {self.x_max}")
        if self.x_nodes < 2:
            raise ConfigurationError(f"x_nodes must be at least 2, got {self.x_nodes}")
        if self.synthesis_cut is not None and self.synthesis_cut <= 1.0:
            raise ConfigurationError(f"synthesis_cut must exceed 1, got {self.synthesis_cut}")
        if self.crosscheck_window <= 0:
            raise ConfigurationError("crosscheck_window must be positive")
        if self.crosscheck_modes < 64 or self.crosscheck_modes % 2:
            raise ConfigurationError(
                f"crosscheck_modes must be an even number >= 64, got {self.crosscheck_modes}")
        if self.crosscheck_steps < 1:
            raise ConfigurationError("crosscheck_steps must be at least 1")

    def nodes(self) -> np.ndarray:
        """Uniform x nodes on [-x_max, x_max]."""
        return np.linspace(-self.x_max, self.x_max, self.x_nodes)

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> "ReconstructConfig":
        """Build from a merged configuration (``reconstruct`` and ``quadrature`` sections)."""
        values = dict(DEFAULT_CONFIG["reconstruct"])
        values.update(config.get("reconstruct", {}))
        quadrature = dict(DEFAULT_CONFIG["quadrature"])
        quadrature.update(config.get("quadrature", {}))
        return cls(quadrature=QuadratureSpec.from_dict(quadrature),
                   **{k: v for k, v in values.items() if k in cls.__dataclass_fields__})


@dataclass
class PhysicalField:
    """A field sampled at the nodes ``x`` at time ``t``."""

    x: np.ndarray
    values: np.ndarray
    t: float
    equation: EquationKind
    errors: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """JSON metadata of the field (the samples themselves go to CSV)."""
        info = {
            "t": self.t,
            "equation": self.equation.value,
            "nodes": int(len(self.x)),
            "x_range": [float(self.x[0]), float(self.x[-1])] if len(self.x) else [],
        }
        if self.errors is not None and len(self.errors):
            info["max_synthesis_error"] = float(np.max(self.errors))
        info.update(self.metadata)
        return info


def dispersion_sign(kind) -> int:
    """Sign of P(xi) in the free propagator exp(i sd P(xi) t)."""
    return -1 if EquationKind.parse(kind) == EquationKind.MBO else 1


def _hat(params: AnsatzParams, xi: np.ndarray, remainder: np.ndarray,
         include_ansatz: bool = True) -> np.ndarray:
    law = law_for(params.equation, params.mkdv_sign)
    p = float(law.weight_exponent)
    W = np.asarray(remainder, dtype=complex)
    if include_ansatz:
        W = W + np.asarray(eval_ansatz(params, xi), dtype=complex)
    out = np.exp(1j * dispersion_sign(params.equation) * law.phase(xi)) * W
    if p:
        nonzero = xi != 0
        out[nonzero] = out[nonzero] * np.abs(xi[nonzero]) ** (-p)
        # the weight is integrable; quadratures never sample the origin
        out[~nonzero] = 0.0
    return out


def hat_profile(params: AnsatzParams, z: Optional[Profile], xi):
    """
    Fourier transform of the profile at time 1.

    Args:
        params: Ansatz parameters (they carry the equation)
        z: Remainder, or None for z = 0
        xi: Frequency (scalar or array)

    Returns:
        Complex value(s); 0 at xi = 0 for the weighted equations
    """
    scalar = np.ndim(xi) == 0
    flat = np.atleast_1d(np.asarray(xi, dtype=float)).ravel()
    remainder = (np.asarray(z.evaluate(flat), dtype=complex) if z is not None
                 else np.zeros(flat.shape, dtype=complex))
    out = _hat(params, flat, remainder)
    if scalar:
        return complex(out[0])
    return out.reshape(np.shape(xi))


def stationary_frequency(kind, x: float) -> float:
    """
    Largest frequency at which the synthesis phase is stationary for |x| <= x.

    The mKdV and mBO ansatz corrections carry phases of their own, whose
    stationary points lie further out than those of the leading term.
    """
    kind = EquationKind.parse(kind)
    x = abs(float(x))
    if kind == EquationKind.KDV4:
        return np.sqrt(x / 3.0)
    if kind == EquationKind.MKDV:
        return np.sqrt(3.0 * x)
    if kind == EquationKind.MBO:
        return 1.5 * x
    return 0.5 * x


def _synthesis_rule(kind, cut: float, x_max: float, spec: QuadratureSpec,
                    coarse: bool) -> Tuple[np.ndarray, np.ndarray]:
    law = law_for(kind)
    gradient = float(law.phase_derivative(cut)) + x_max
    n_panels = panel_count(cut, gradient, spec.oscillation_resolution, spec.gauss_order)
    if coarse:
        n_panels = max(1, n_panels // 2)
    if law.hermitian:
        x, w = segment_rule(0.0, cut, n_panels, spec.gauss_order, law.singular_grading, "left")
        return x[0], w[0]
    return axis_rule(-cut, cut, [0.0], n_panels, spec.gauss_order, law.singular_grading)


def _synthesize_chunk(x: np.ndarray, xi: np.ndarray, weighted: np.ndarray,
                      hermitian: bool) -> np.ndarray:
    values = np.exp(1j * np.outer(x, xi)) @ weighted
    if hermitian:
        return values.real / np.pi
    return values / (2.0 * np.pi)


def _synthesize(hat_values: np.ndarray, xi: np.ndarray, w: np.ndarray, x: np.ndarray,
                cut: float, fraction: float, hermitian: bool) -> np.ndarray:
    weighted = hat_values * w * taper(xi, cut, fraction)
    if not np.all(np.isfinite(weighted)):
        bad = int(np.argmax(~np.isfinite(weighted)))
        raise NumericalOverflowError("Non-finite profile sample in synthesis", node=float(xi[bad]))
    size = max(1, CHUNK_BUDGET // max(len(xi), 1))
    chunks = [x[i:i + size] for i in range(0, len(x), size)]
    with ThreadPoolExecutor(max_workers=thread_count()) as executor:
        futures = [executor.submit(_synthesize_chunk, chunk, xi, weighted, hermitian)
                   for chunk in chunks]
        parts = [future.result() for future in futures]
    out = np.concatenate(parts) if parts else np.zeros(0)
    return np.asarray(out, dtype=complex)


def physical_profile(params: AnsatzParams, z: Optional[Profile],
                     x_nodes: Optional[np.ndarray] = None,
                     cfg: Optional[ReconstructConfig] = None) -> PhysicalField:
    """
    Inverse Fourier synthesis of the profile at time 1.

    The ansatz and the remainder are synthesized separately on the same
    phase-resolving panels (graded at the origin, where the weight |xi|^(-p)
    is singular) and summed. Each part is also computed with half the
    panels; the difference is the per-node error estimate.

    Args:
        params: Ansatz parameters
        z: Remainder, or None
        x_nodes: Evaluation points (default: ``cfg.nodes()``)
        cfg: Reconstruction settings

    Returns:
        PhysicalField at t = 1; real-valued for every equation but NLS
    """
    cfg = cfg or ReconstructConfig()
    kind = params.equation
    law = law_for(kind, params.mkdv_sign)
    x = cfg.nodes() if x_nodes is None else np.atleast_1d(np.asarray(x_nodes, dtype=float))
    x_max = float(np.max(np.abs(x))) if len(x) else 0.0
    cut = (float(cfg.synthesis_cut) if cfg.synthesis_cut is not None
           else 2.0 * stationary_frequency(kind, x_max) + 8.0)
    spec = cfg.quadrature

    parts = {}
    for coarse in (False, True):
        xi, w = _synthesis_rule(kind, cut, x_max, spec, coarse)
        remainder = (np.asarray(z.evaluate(xi), dtype=complex) if z is not None
                     else np.zeros(xi.shape, dtype=complex))
        ansatz_part = _synthesize(_hat(params, xi, np.zeros_like(remainder)), xi, w, x, cut,
                                  spec.taper_fraction, law.hermitian)
        remainder_part = _synthesize(_hat(params, xi, remainder, include_ansatz=False), xi, w,
                                     x, cut, spec.taper_fraction, law.hermitian)
        parts[coarse] = (ansatz_part, remainder_part, len(xi))

    ansatz_fine, remainder_fine, fine_nodes = parts[False]
    ansatz_coarse, remainder_coarse, _ = parts[True]
    values = ansatz_fine + remainder_fine
    ansatz_error = np.abs(ansatz_fine - ansatz_coarse)
    remainder_error = np.abs(remainder_fine - remainder_coarse)
    errors = ansatz_error + remainder_error

    scale = float(np.max(np.abs(values))) if len(values) else 0.0
    unresolved = int(np.sum(errors > cfg.synthesis_tol * max(scale, 1e-300)))
    if unresolved and scale > 0:
        logger.warning(f"{unresolved} of {len(x)} synthesis nodes exceed the relative "
                       f"tolerance {cfg.synthesis_tol:g}")
    logger.info(f"Synthesized {kind.value} profile at {len(x)} nodes, cut {cut:.4g}, "
                f"{fine_nodes} frequency nodes")
    metadata = {
        "synthesis_cut": cut,
        "synthesis_tol": cfg.synthesis_tol,
        "frequency_nodes": fine_nodes,
        "ansatz_error_max": float(np.max(ansatz_error)) if len(x) else 0.0,
        "remainder_error_max": float(np.max(remainder_error)) if len(x) else 0.0,
        "unresolved_nodes": unresolved,
    }
    return PhysicalField(x=x, values=values, t=1.0, equation=kind, errors=errors,
                         metadata=metadata)


def selfsimilar_field(profile_field: PhysicalField, t: float) -> PhysicalField:
    """
    Rescale a field to time ``t`` along the self-similar flow.

    A field known at time t0 becomes ``r**(-alpha) F(x / r**beta)`` at t with
    r = t / t0, sampled at the rescaled nodes ``r**beta * x``.
    """
    if t <= 0:
        raise ConfigurationError(f"Time must be positive, got {t}")
    alpha, beta = selfsimilar_exponents(profile_field.equation)
    ratio = float(t) / profile_field.t
    amplitude = ratio ** (-float(alpha))
    errors = None if profile_field.errors is None else profile_field.errors * amplitude
    return PhysicalField(x=profile_field.x * ratio ** float(beta),
                         values=profile_field.values * amplitude, t=float(t),
                         equation=profile_field.equation, errors=errors,
                         metadata=dict(profile_field.metadata))


def periodic_field(params: AnsatzParams, z: Optional[Profile], t: float, window: float,
                   modes: int) -> PhysicalField:
    """
    The self-similar field at time ``t`` sampled on a periodic window.

    Fourier coefficients are read off the profile at the scaled frequencies
    t**beta * xi_k, tapered towards the Nyquist frequency. The zero mode is
    the cell average of |xi|^(-p) W over [-dxi/2, dxi/2].

    Args:
        params: Ansatz parameters
        z: Remainder, or None
        t: Time (positive)
        window: Length L of the periodic window [-L/2, L/2)
        modes: Number of grid points

    Returns:
        PhysicalField on the window nodes
    """
    if t <= 0:
        raise ConfigurationError(f"Time must be positive, got {t}")
    kind = params.equation
    law = law_for(kind, params.mkdv_sign)
    alpha, beta = (float(e) for e in selfsimilar_exponents(kind))
    p = float(law.weight_exponent)
    x = -0.5 * window + window * np.arange(modes) / modes
    xi = 2.0 * np.pi * fftfreq(modes, d=window / modes)
    dxi = 2.0 * np.pi / window
    scale = t ** beta
    amplitude = t ** (beta - alpha)

    coefficients = np.zeros(modes, dtype=complex)
    nonzero = xi != 0
    coefficients[nonzero] = amplitude * hat_profile(params, z, scale * xi[nonzero])

    eps = 0.25 * scale * dxi
    near_zero = np.array([eps, -eps])
    W = np.asarray(eval_ansatz(params, near_zero), dtype=complex)
    if z is not None:
        W = W + np.asarray(z.evaluate(near_zero), dtype=complex)
    W0 = 0.5 * (W[0] + W[1])
    coefficients[~nonzero] = amplitude * scale ** (-p) * W0 * (0.5 * dxi) ** (-p) / (1.0 - p)

    nyquist = np.pi * modes / window
    coefficients *= taper(xi, nyquist, SPECTRAL_TAPER_FRACTION)
    shifted = coefficients * (modes / window) * np.exp(-0.5j * xi * window)
    values = ifft(shifted, workers=thread_count())
    if law.hermitian:
        values = values.real.astype(complex)
    return PhysicalField(x=x, values=values, t=float(t), equation=kind,
                         metadata={"window": window, "modes": modes})


@dataclass
class CrosscheckReport:
    """Outcome of the split-step comparison."""

    equation: EquationKind
    dt: float
    steps: int
    window: float
    modes: int
    compare_radius: float
    discrepancy: float
    linear_discrepancy: float
    reference_norm: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "equation": self.equation.value,
            "dt": self.dt,
            "steps": self.steps,
            "window": self.window,
            "modes": self.modes,
            "compare_radius": self.compare_radius,
            "discrepancy": self.discrepancy,
            "linear_discrepancy": self.linear_discrepancy,
            "reference_norm": self.reference_norm,
        }


def _linear_symbol(kind, xi: np.ndarray) -> np.ndarray:
    law = law_for(kind)
    return dispersion_sign(kind) * law.phase(xi)


def _nonlinear_step(kind, u: np.ndarray, h: float, xi: np.ndarray, dealias: np.ndarray,
                    mkdv_sign: int) -> np.ndarray:
    if kind == EquationKind.NLS:
        return u * np.exp(-1j * np.abs(u) ** 2 * h)

    power, coefficient = DERIVATIVE_TERMS[kind]
    if kind == EquationKind.MKDV:
        coefficient *= mkdv_sign
    workers = thread_count()

    def rhs(v):
        flux = fft(v ** power, workers=workers)
        return coefficient * ifft(1j * xi * dealias * flux, workers=workers).real

    u = u.real
    k1 = rhs(u)
    k2 = rhs(u + 0.5 * h * k1)
    k3 = rhs(u + 0.5 * h * k2)
    k4 = rhs(u + h * k3)
    return (u + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0).astype(complex)


def _relative_l2(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> Tuple[float, float]:
    diff = float(np.linalg.norm(a[mask] - b[mask]))
    ref = float(np.linalg.norm(b[mask]))
    return (diff / ref if ref > 0 else diff), ref


def evolution_crosscheck(params: AnsatzParams, z: Optional[Profile], dt: float,
                         cfg: Optional[ReconstructConfig] = None) -> CrosscheckReport:
    """
    Evolve the self-similar field from t = 1 to 1 + dt and compare.

    The linear flow is applied exactly in Fourier space in two half steps
    around a nonlinear step: the exact phase rotation for NLS, classical
    Runge-Kutta with a pseudo-spectral derivative otherwise. The discrepancy
    is the relative L2 distance to the rescaled field on |x| <= L/4; the
    report also gives the distance reached by the linear flow alone.

    Raises:
        ConfigurationError: If dt is outside (0, 0.2], the window is too
            coarse for the comparison region, or the nonlinear step is
            unstable
    """
    cfg = cfg or ReconstructConfig()
    kind = params.equation
    if not (0 < dt <= MAX_CROSSCHECK_DT):
        raise ConfigurationError(f"dt must lie in (0, {MAX_CROSSCHECK_DT}], got {dt}")
    window, modes, steps = cfg.crosscheck_window, cfg.crosscheck_modes, cfg.crosscheck_steps
    compare_radius = 0.25 * window
    nyquist = np.pi * modes / window
    needed = stationary_frequency(kind, compare_radius)
    if needed > SPECTRAL_TAPER_FRACTION * nyquist:
        raise ConfigurationError(
            f"{modes} modes on a window of {window:g} resolve frequencies up to "
            f"{SPECTRAL_TAPER_FRACTION * nyquist:.3g}, but |x| <= {compare_radius:g} needs "
            f"{needed:.3g}; increase crosscheck_modes or reduce crosscheck_window")

    start = periodic_field(params, z, 1.0, window, modes)
    reference = periodic_field(params, z, 1.0 + dt, window, modes)
    xi = 2.0 * np.pi * fftfreq(modes, d=window / modes)
    dealias = (np.abs(xi) <= DEALIASING_RATIO * nyquist).astype(float)
    h = dt / steps

    if kind != EquationKind.NLS:
        power, _ = DERIVATIVE_TERMS[kind]
        speed = power * float(np.max(np.abs(start.values))) ** (power - 1)
        if h * speed * DEALIASING_RATIO * nyquist > RK4_STABILITY:
            raise ConfigurationError(
                f"Nonlinear step unstable (h={h:.3g}); increase crosscheck_steps")

    workers = thread_count()
    half = np.exp(0.5j * h * _linear_symbol(kind, xi))
    spectrum = fft(start.values, workers=workers)
    for _ in range(steps):
        spectrum = spectrum * half
        u = ifft(spectrum, workers=workers)
        u = _nonlinear_step(kind, u, h, xi, dealias, params.mkdv_sign)
        spectrum = fft(u, workers=workers) * half
    evolved = ifft(spectrum, workers=workers)
    linear = ifft(fft(start.values, workers=workers) * np.exp(1j * dt * _linear_symbol(kind, xi)),
                  workers=workers)
    if law_for(kind).hermitian:
        evolved, linear = evolved.real, linear.real

    mask = np.abs(start.x) <= compare_radius
    discrepancy, ref_norm = _relative_l2(evolved, reference.values, mask)
    linear_discrepancy, _ = _relative_l2(linear, reference.values, mask)
    logger.info(f"Cross-check {kind.value}: dt={dt:g}, discrepancy {discrepancy:.3e} "
                f"(linear flow alone {linear_discrepancy:.3e})")
    return CrosscheckReport(equation=kind, dt=float(dt), steps=steps, window=window,
                            modes=modes, compare_radius=compare_radius,
                            discrepancy=discrepancy, linear_discrepancy=linear_discrepancy,
                            reference_norm=ref_norm)
