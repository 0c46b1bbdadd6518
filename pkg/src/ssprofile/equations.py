"""
Registry of the four dispersive equations and their scaling data.

Each equation is described by a frozen ``ScalingLaw`` record: dispersion
order, nonlinearity degree, the weights and constants of its differentiated
profile equation ``W'(eta) = K * w(eta) * N[W](eta)``, the orientation of its
interaction phase and the resonant points of the scaled phase.
"""

import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Tuple

import numpy as np

from .errors import ConfigurationError

logger = logging.getLogger(__name__)


class EquationKind(str, Enum):
    """The four supported equations."""

    MKDV = "mkdv"
    KDV4 = "kdv4"
    MBO = "mbo"
    NLS = "nls"

    @classmethod
    def parse(cls, value) -> "EquationKind":
        """Accept an ``EquationKind`` or its (case-insensitive) tag."""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ConfigurationError(f"Unknown equation '{value}' (expected one of: {names})")


@dataclass(frozen=True)
class ScalingLaw:
    """Static data of one equation.

    ``interaction_sign`` is +1 when the multilinear operator carries
    ``exp(-i Phi)`` and -1 for ``exp(+i Phi)``. ``factor_signs`` gives the sign
    with which each factor's dispersion enters Phi (the conjugated NLS factor
    enters with -1). ``default_window`` is the frequency up to which the solver
    computes the nonlinearity; stored nodes beyond it follow the tail model.
    """

    kind: EquationKind
    dispersion_order: int
    nonlinearity_degree: int
    derivative_loss: int
    weight_exponent: Fraction
    amplitude_decay: Fraction
    kappa_interval: Tuple[float, float]
    kappa_default: float
    driving: str
    anchor: float
    interaction_sign: int
    factor_signs: Tuple[int, ...]
    profile_constant: complex
    hermitian: bool
    singular_grading: int
    default_window: float
    stationary_points: Tuple[Tuple[float, ...], ...]

    @property
    def argument_exponent(self) -> Fraction:
        """Exponent of t in the self-similar variable x / t**(1/n)."""
        return Fraction(1, self.dispersion_order)

    def phase(self, xi):
        """Dispersion relation P(xi) entering the interaction phase."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == EquationKind.MBO:
            return xi * np.abs(xi)
        if self.kind == EquationKind.NLS:
            return xi ** 2
        return xi ** 3

    def phase_derivative(self, xi):
        """Derivative P'(xi)."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == EquationKind.MBO:
            return 2.0 * np.abs(xi)
        if self.kind == EquationKind.NLS:
            return 2.0 * xi
        return 3.0 * xi ** 2

    def outer_weight(self, eta):
        """The weight w(eta) multiplying N in the profile equation."""
        eta = np.asarray(eta, dtype=float)
        if self.kind == EquationKind.KDV4:
            return np.abs(eta) ** (1.0 / 3.0)
        if self.kind == EquationKind.MBO:
            return np.sqrt(np.abs(eta))
        if self.kind == EquationKind.NLS:
            with np.errstate(divide="ignore"):
                return 1.0 / eta
        return np.ones_like(eta)

    def scaled_phase(self, p) -> float:
        """Phase P(1) - sum_j s_j P(p_j) on the hyperplane sum(p) = 1."""
        p = np.asarray(p, dtype=float)
        return float(self.phase(1.0) - np.sum(np.asarray(self.factor_signs) * self.phase(p)))


_CUBIC_RESONANCES = ((1.0, 1.0, -1.0), (1.0, -1.0, 1.0), (-1.0, 1.0, 1.0),
                     (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0))

_QUARTIC_RESONANCES = ((0.25, 0.25, 0.25, 0.25),
                       (0.5, 0.5, 0.5, -0.5), (0.5, 0.5, -0.5, 0.5),
                       (0.5, -0.5, 0.5, 0.5), (-0.5, 0.5, 0.5, 0.5))

LAWS = {
    EquationKind.MKDV: ScalingLaw(
        kind=EquationKind.MKDV, dispersion_order=3, nonlinearity_degree=3,
        derivative_loss=1, weight_exponent=Fraction(0), amplitude_decay=Fraction(1, 3),
        kappa_interval=(0.5, 4.0 / 7.0), kappa_default=0.55, driving="c", anchor=0.0,
        interaction_sign=1, factor_signs=(1, 1, 1),
        profile_constant=-3j / (4.0 * np.pi ** 2), hermitian=True, singular_grading=2,
        default_window=32.0, stationary_points=_CUBIC_RESONANCES),
    EquationKind.KDV4: ScalingLaw(
        kind=EquationKind.KDV4, dispersion_order=3, nonlinearity_degree=4,
        derivative_loss=1, weight_exponent=Fraction(1, 3), amplitude_decay=Fraction(2, 9),
        kappa_interval=(5.0 / 8.0, 2.0 / 3.0), kappa_default=0.64, driving="c", anchor=0.0,
        interaction_sign=1, factor_signs=(1, 1, 1, 1),
        profile_constant=-3j / (8.0 * np.pi ** 3), hermitian=True, singular_grading=3,
        default_window=32.0, stationary_points=_QUARTIC_RESONANCES),
    EquationKind.MBO: ScalingLaw(
        kind=EquationKind.MBO, dispersion_order=2, nonlinearity_degree=3,
        derivative_loss=1, weight_exponent=Fraction(1, 2), amplitude_decay=Fraction(1, 4),
        kappa_interval=(0.0, 0.25), kappa_default=0.2, driving="c", anchor=0.0,
        interaction_sign=-1, factor_signs=(1, 1, 1),
        profile_constant=1j / (2.0 * np.pi ** 2), hermitian=True, singular_grading=2,
        default_window=256.0, stationary_points=_CUBIC_RESONANCES),
    EquationKind.NLS: ScalingLaw(
        kind=EquationKind.NLS, dispersion_order=2, nonlinearity_degree=3,
        derivative_loss=0, weight_exponent=Fraction(0), amplitude_decay=Fraction(1, 2),
        kappa_interval=(0.0, 0.5), kappa_default=0.3, driving="A", anchor=1.0,
        interaction_sign=1, factor_signs=(1, -1, 1),
        profile_constant=-1j / (2.0 * np.pi ** 2), hermitian=False, singular_grading=2,
        default_window=256.0, stationary_points=((1.0, -1.0, 1.0),)),
}


def law_for(kind, mkdv_sign: int = 1) -> ScalingLaw:
    """
    Return the ``ScalingLaw`` of an equation.

    Args:
        kind: Equation tag or ``EquationKind``
        mkdv_sign: Nonlinearity sign of mKdV (+1 focusing, -1 defocusing);
            flips the profile constant

    Returns:
        The frozen law record
    """
    kind = EquationKind.parse(kind)
    law = LAWS[kind]
    if kind == EquationKind.MKDV:
        if mkdv_sign not in (1, -1):
            raise ConfigurationError(f"mkdv_sign must be +1 or -1, got {mkdv_sign}")
        if mkdv_sign == -1:
            law = dataclasses.replace(law, profile_constant=-law.profile_constant)
    return law


def scaling_exponent(kind) -> Fraction:
    """Return (n - m)/(k - 1), the amplitude exponent of the scaling symmetry."""
    law = law_for(kind)
    return Fraction(law.dispersion_order - law.derivative_loss, law.nonlinearity_degree - 1)


def critical_regularity(kind) -> Fraction:
    """Critical Fourier-Lebesgue index: one minus the scaling exponent."""
    return 1 - scaling_exponent(kind)


def selfsimilar_exponents(kind) -> Tuple[Fraction, Fraction]:
    """
    Exponents of the self-similar form ``t**(-alpha) P(x / t**beta)``.

    Returns:
        ``(alpha, beta)`` with ``alpha = scaling_exponent / n`` and ``beta = 1/n``
    """
    law = law_for(kind)
    return scaling_exponent(kind) / law.dispersion_order, law.argument_exponent


def validate_kappa(kind, kappa: float) -> float:
    """Raise ``ConfigurationError`` unless kappa lies in the open admissible interval."""
    law = law_for(kind)
    lo, hi = law.kappa_interval
    if not (lo < kappa < hi):
        raise ConfigurationError(
            f"kappa={kappa} outside the admissible interval ({lo:.6g}, {hi:.6g}) "
            f"for {law.kind.value}")
    return float(kappa)
