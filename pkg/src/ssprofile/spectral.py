"""
FFT-convolution backend for the multilinear operators.

With G_j(x) = exp(i tau s_j P(x)) f_j(x) |x|^(-p), every operator equals
exp(-i tau P(eta)) (G_1 * ... * G_k)(eta), so one chain of linear
convolutions on a uniform grid gives its values at all grid frequencies at
once. The |x|^(-p) singularity at the zero node is corrected with the
zeta-function weight of the generalized Euler-Maclaurin formula.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve
from scipy.special import zeta

from .equations import EquationKind, law_for
from .errors import ConfigurationError
from .oscillatory import Factor, chi_factor, taper as window_taper

logger = logging.getLogger(__name__)

# Largest number of samples per factor accepted before refusing the request.
MAX_SAMPLES = 1 << 23


@dataclass
class SpectralResult:
    """Operator values on the uniform output grid."""

    eta: np.ndarray
    values: np.ndarray
    spacing: float
    window: Tuple[float, float]

    def restrict(self, lo: float, hi: float) -> "SpectralResult":
        """Keep the output nodes inside [lo, hi]."""
        keep = (self.eta >= lo - 1e-12) & (self.eta <= hi + 1e-12)
        return SpectralResult(self.eta[keep], self.values[keep], self.spacing, self.window)

    def at(self, eta) -> np.ndarray:
        """Cubic-spline interpolation of real and imaginary parts."""
        eta = np.asarray(eta, dtype=float)
        margin = 8.0 * self.spacing
        keep = (self.eta >= np.min(eta) - margin) & (self.eta <= np.max(eta) + margin)
        re = CubicSpline(self.eta[keep], self.values[keep].real)
        im = CubicSpline(self.eta[keep], self.values[keep].imag)
        return re(eta) + 1j * im(eta)


def resolution_spacing(kind, radius: float, resolution: int = 8) -> float:
    """Grid spacing h = 2 pi / (resolution * max |P'|) on the window, as 1/m."""
    law = law_for(kind)
    gradient = float(np.max(np.abs(law.phase_derivative(np.array([radius, 1.0])))))
    h = 2.0 * np.pi / (resolution * max(gradient, 1.0))
    return 1.0 / np.ceil(1.0 / h)


def _sample(f: Factor, x: np.ndarray, sign: int, tau: int, law, p: float, h: float,
            conj_reflect: bool) -> np.ndarray:
    def raw(points):
        points = np.asarray(points, dtype=float)
        if conj_reflect:
            return np.conj(np.asarray(f(-points), dtype=complex))
        return np.asarray(f(points), dtype=complex)

    values = raw(x) * np.exp(1j * tau * sign * law.phase(x))
    if p:
        zero = np.isclose(x, 0.0, atol=0.25 * h)
        nonzero = ~zero
        values[nonzero] = values[nonzero] * np.abs(x[nonzero]) ** (-p)
        if np.any(zero):
            eps = 1e-9 * h
            f0 = 0.5 * (raw(np.array([eps]))[0] + raw(np.array([-eps]))[0])
            values[zero] = -2.0 * zeta(p) * h ** (-p) * f0
    return values


def spectral_multilinear(kind, factors: Sequence[Factor],
                         window: Union[float, Tuple[float, float]],
                         spacing: Optional[float] = None, taper: bool = True,
                         weights: Optional[Sequence[float]] = None, mkdv_sign: int = 1,
                         resolution: int = 8, taper_fraction: float = 0.8) -> SpectralResult:
    """
    Evaluate an operator on every node of a uniform frequency grid.

    Args:
        kind: Equation whose phase, orientation and conjugated slot are used
        factors: One vectorized callable per slot
        window: Radius L (factors sampled on [-L, L]) or an explicit (lo, hi)
        spacing: Grid step; snapped to 1/m so that 0 and 1 are nodes
        taper: Multiply factors by the smooth window on [taper_fraction*L, L]
        weights: Singular exponents per slot (default: the equation's)
        mkdv_sign: mKdV nonlinearity sign
        resolution: Nodes per phase period when ``spacing`` is omitted
        taper_fraction: Start of the taper relative to the window radius

    Returns:
        SpectralResult on the grid k*lo + n*h
    """
    kind = EquationKind.parse(kind)
    law = law_for(kind, mkdv_sign)
    k = law.nonlinearity_degree
    factors = list(factors)
    if len(factors) != k:
        raise ConfigurationError(f"{kind.value} takes {k} factors, got {len(factors)}")
    weights = list(weights) if weights is not None else [float(law.weight_exponent)] * k
    if len(weights) != k:
        raise ConfigurationError(f"Expected {k} weight exponents, got {len(weights)}")

    if np.ndim(window) == 0:
        lo, hi = -float(window), float(window)
    else:
        lo, hi = float(window[0]), float(window[1])
    if hi <= lo:
        raise ConfigurationError(f"Empty spectral window ({lo}, {hi})")
    radius = max(abs(lo), abs(hi))

    h = spacing if spacing is not None else resolution_spacing(kind, radius, resolution)
    h = 1.0 / np.ceil(1.0 / h - 1e-9)
    start = np.floor(lo / h + 1e-9) * h
    count = int(np.round((hi - start) / h)) + 1
    if count > MAX_SAMPLES:
        raise ConfigurationError(
            f"Spectral grid would need {count} samples; reduce the window or resolution")
    x = start + h * np.arange(count)

    tau = law.interaction_sign
    window_values = window_taper(x, radius, taper_fraction) if taper else np.ones_like(x)
    sampled = {}
    result = None
    for j, f in enumerate(factors):
        sign = law.factor_signs[j]
        key = (id(f), sign, weights[j])
        if key not in sampled:
            sampled[key] = _sample(f, x, sign, tau, law, weights[j], h,
                                   conj_reflect=sign < 0) * window_values
        g = sampled[key]
        result = g if result is None else fftconvolve(result, g)
    result = result * h ** (k - 1)

    eta = k * start + h * np.arange(len(result))
    values = np.exp(-1j * tau * law.phase(eta)) * result
    logger.debug(f"Spectral {kind.value}: {count} samples, h={h:.3g}, window=({lo:.3g}, {hi:.3g})")
    return SpectralResult(eta=eta, values=values, spacing=h, window=(lo, hi))


def kernel_K(zetas, resolution: int = 8) -> np.ndarray:
    """
    The cubic kernel K(zeta) of three one-sided cutoffs with |eta_j|^(-1/3) weights.

    All three factors vanish below 1/2, so sampling on [0, max zeta] with
    no taper is an exact truncation for the requested frequencies.
    """
    zetas = np.atleast_1d(np.asarray(zetas, dtype=float))
    top = float(np.max(np.abs(zetas))) + 1.0
    result = spectral_multilinear(EquationKind.MKDV, [chi_factor()] * 3, (0.0, top),
                                  taper=False, weights=[1.0 / 3.0] * 3, resolution=resolution)
    out = np.zeros(zetas.shape, dtype=complex)
    pos = zetas >= 0
    out[pos] = result.at(zetas[pos])
    # K(-zeta) = conj K(zeta) for real factors
    out[~pos] = np.conj(result.at(-zetas[~pos]))
    return out


def m_constant(etas, resolution: int = 8) -> np.ndarray:
    """M applied to four one-sided cutoffs, on [0, max eta] exactly."""
    etas = np.atleast_1d(np.asarray(etas, dtype=float))
    top = float(np.max(etas)) + 1.0
    result = spectral_multilinear(EquationKind.KDV4, [chi_factor()] * 4, (0.0, top),
                                  taper=False, resolution=resolution)
    return result.at(etas)
