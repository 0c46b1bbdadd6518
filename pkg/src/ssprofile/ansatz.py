"""
Closed-form high-frequency ansatz S_A and its derivative for each equation.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from .equations import EquationKind
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

# Weight of |c|^2 in the mBO logarithmic phase rate. The resonant weight matches
# the high x low x low constant pi and is the default; the nominal weight pairs
# with a constant pi/4.
NOMINAL_LOW_FREQUENCY_WEIGHT = 3.0
RESONANT_LOW_FREQUENCY_WEIGHT = 12.0


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth cutoff: 0 below ``lower``, 1 above ``upper``, quintic bridge."""

    lower: float = 0.5
    upper: float = 1.0
    bridge: str = "quintic"

    def __post_init__(self):
        if not (0 < self.lower < self.upper):
            raise ConfigurationError(
                f"cutoff needs 0 < lower < upper, got ({self.lower}, {self.upper})")
        if self.bridge != "quintic":
            raise ConfigurationError(f"Unsupported cutoff bridge '{self.bridge}'")


DEFAULT_CUTOFF = CutoffSpec()


def _bridge_variable(xi, spec: CutoffSpec):
    xi = np.asarray(xi, dtype=float)
    return np.clip((xi - spec.lower) / (spec.upper - spec.lower), 0.0, 1.0)


def chi(xi, spec: CutoffSpec = DEFAULT_CUTOFF):
    """Cutoff chi(xi) in [0, 1]; exact 0 below ``lower`` and 1 above ``upper``."""
    t = _bridge_variable(xi, spec)
    value = t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)
    return float(value) if np.ndim(value) == 0 else value


def chi_prime(xi, spec: CutoffSpec = DEFAULT_CUTOFF):
    """Exact derivative of ``chi``; supported in [lower, upper]."""
    t = _bridge_variable(xi, spec)
    value = 30.0 * t ** 2 * (1.0 - t) ** 2 / (spec.upper - spec.lower)
    return float(value) if np.ndim(value) == 0 else value


def mbo_phase_params(A: complex, c: float,
                     low_frequency_weight: float = RESONANT_LOW_FREQUENCY_WEIGHT
                     ) -> Tuple[float, complex]:
    """
    Phase parameters of the mBO ansatz.

    Args:
        A: High-frequency amplitude
        c: Zero-frequency value (real)
        low_frequency_weight: Coefficient of |c|^2 in the numerator of ``a``

    Returns:
        ``(a, B)`` with a = (12|A|^2 + w|c|^2)/(8 pi) and B = 3 sqrt(3) i A^3/(8 pi)
    """
    A = complex(A)
    a = (12.0 * abs(A) ** 2 + low_frequency_weight * abs(c) ** 2) / (8.0 * np.pi)
    B = 3.0 * np.sqrt(3.0) * 1j * A ** 3 / (8.0 * np.pi)
    return float(a), complex(B)


@dataclass(frozen=True)
class AnsatzParams:
    """
    Parameters of S_A for one equation.

    ``mkdv_sign`` is the mKdV nonlinearity sign; ``nls_negative_sign`` orients
    the logarithmic phase of the NLS ansatz on xi < 0 (+1 reproduces the
    closed two-sided formula, -1 gives both half-lines the same rotation).
    ``rate_correction`` is added to the logarithmic phase rate of the mKdV and
    mBO leading term; the solver fits it so that the remainder carries no
    1/xi part in its derivative.
    """

    equation: EquationKind
    A: complex = 0j
    c: complex = 0j
    a: float = 0.0
    B: complex = 0j
    mkdv_sign: int = 1
    nls_negative_sign: int = 1
    rate_correction: complex = 0j
    cutoff: CutoffSpec = field(default=DEFAULT_CUTOFF)

    def __post_init__(self):
        object.__setattr__(self, "equation", EquationKind.parse(self.equation))
        object.__setattr__(self, "A", complex(self.A))
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "B", complex(self.B))
        object.__setattr__(self, "rate_correction", complex(self.rate_correction))
        if self.mkdv_sign not in (1, -1) or self.nls_negative_sign not in (1, -1):
            raise ConfigurationError("Ansatz orientation signs must be +1 or -1")

    @classmethod
    def build(cls, equation, A: complex, c: complex = 0j,
              low_frequency_weight: float = RESONANT_LOW_FREQUENCY_WEIGHT,
              **kwargs) -> "AnsatzParams":
        """Construct parameters, deriving (a, B) from (A, c) for mBO."""
        equation = EquationKind.parse(equation)
        if equation == EquationKind.MBO:
            a, B = mbo_phase_params(A, float(np.real(c)), low_frequency_weight)
            return cls(equation=equation, A=A, c=c, a=a, B=B, **kwargs)
        return cls(equation=equation, A=A, c=c, **kwargs)

    @property
    def mkdv_rate(self) -> float:
        """Logarithmic phase rate 3|A|^2/(4 pi), signed by the nonlinearity."""
        return self.mkdv_sign * 3.0 * abs(self.A) ** 2 / (4.0 * np.pi)

    @property
    def nls_rate(self) -> float:
        return abs(self.A) ** 2 / (2.0 * np.pi)

    @property
    def second_order_amplitude(self) -> complex:
        """Coefficient of the xi^-3 correction of the mKdV ansatz."""
        A = self.A
        constant = np.exp(-1j * self.mkdv_sign * 3.0 * abs(A) ** 2 / (4.0 * np.pi) * np.log(3.0))
        return self.mkdv_sign * 3j * abs(A) ** 2 * A * constant / (16.0 * np.sqrt(2.0) * np.pi)

    @property
    def log_rate(self) -> float:
        """Rate rho of the leading term A exp(i rho log xi) for xi > 0."""
        if self.equation == EquationKind.MKDV:
            return -self.mkdv_rate
        if self.equation == EquationKind.MBO:
            return self.a
        if self.equation == EquationKind.NLS:
            return -self.nls_rate
        return 0.0

    @property
    def leading_rate(self) -> complex:
        """Rate of the leading term including the fitted correction."""
        if self.equation in (EquationKind.MKDV, EquationKind.MBO):
            return self.log_rate + self.rate_correction
        return complex(self.log_rate)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "equation": self.equation.value,
            "A": [self.A.real, self.A.imag],
            "c": [self.c.real, self.c.imag],
            "a": self.a,
            "B": [self.B.real, self.B.imag],
            "mkdv_sign": self.mkdv_sign,
            "nls_negative_sign": self.nls_negative_sign,
            "rate_correction": [self.rate_correction.real, self.rate_correction.imag],
            "cutoff": [self.cutoff.lower, self.cutoff.upper],
        }

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "AnsatzParams":
        def cplx(pair):
            return complex(pair[0], pair[1])

        lower, upper = values.get("cutoff", [0.5, 1.0])
        return cls(equation=values["equation"], A=cplx(values["A"]), c=cplx(values["c"]),
                   a=float(values.get("a", 0.0)), B=cplx(values.get("B", [0.0, 0.0])),
                   mkdv_sign=int(values.get("mkdv_sign", 1)),
                   nls_negative_sign=int(values.get("nls_negative_sign", 1)),
                   rate_correction=cplx(values.get("rate_correction", [0.0, 0.0])),
                   cutoff=CutoffSpec(lower, upper))


def _positive_branch(params: AnsatzParams, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Uncut closed form F(s) and F'(s) for s > 0 (zeros where s <= 0)."""
    safe = np.where(s > 0, s, 1.0)
    log_s = np.log(safe)
    A = params.A
    kind = params.equation
    if kind == EquationKind.KDV4:
        return np.full(s.shape, A, dtype=complex), np.zeros(s.shape, dtype=complex)

    if kind == EquationKind.MKDV:
        r = params.mkdv_rate
        rho = params.leading_rate
        lead = A * np.exp(1j * rho * log_s)
        d_lead = lead * (1j * rho / safe)
        corr_phase = np.exp(-3j * r * log_s - 8j * safe ** 3 / 9.0)
        corr = params.second_order_amplitude * corr_phase / safe ** 3
        d_corr = corr * (-3.0 / safe - 3j * r / safe - 8j * safe ** 2 / 3.0)
        return lead + corr, d_lead + d_corr

    if kind == EquationKind.MBO:
        a = params.a
        rho = params.leading_rate
        lead = A * np.exp(1j * rho * log_s)
        d_lead = lead * (1j * rho / safe)
        corr = params.B * np.exp(2j * safe ** 2 / 3.0 + 3j * a * log_s) / safe ** 2
        d_corr = corr * (-2.0 / safe + 4j * safe / 3.0 + 3j * a / safe)
        return lead + corr, d_lead + d_corr

    # NLS, xi > 0
    rate = params.nls_rate
    lead = A * np.exp(-1j * rate * log_s)
    return lead, lead * (-1j * rate / safe)


def _evaluate(params: AnsatzParams, xi, deriv: bool):
    scalar = np.ndim(xi) == 0
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    spec = params.cutoff
    out = np.zeros(xi.shape, dtype=complex)

    if params.equation == EquationKind.KDV4:
        A = params.A
        if deriv:
            out = A * chi_prime(xi, spec) - np.conj(A) * chi_prime(-xi, spec)
        else:
            out = A * chi(xi, spec) + np.conj(A) * chi(-xi, spec)
        out = np.asarray(out, dtype=complex)
        return complex(out[0]) if scalar else out

    pos = xi > 0
    neg = xi < 0
    if np.any(pos):
        s = xi[pos]
        f, df = _positive_branch(params, s)
        out[pos] = chi_prime(s, spec) * f + chi(s, spec) * df if deriv else chi(s, spec) * f

    if np.any(neg):
        s = -xi[neg]
        if params.equation == EquationKind.NLS:
            rate = params.nls_negative_sign * params.nls_rate
            f = params.A * np.exp(1j * rate * np.log(s))
            if deriv:
                # d/dxi of f(|xi|) chi(-xi) with d log|xi| / dxi = 1/xi
                out[neg] = f * (1j * rate / xi[neg]) * chi(s, spec) - f * chi_prime(s, spec)
            else:
                out[neg] = f * chi(s, spec)
        else:
            f, df = _positive_branch(params, s)
            if deriv:
                out[neg] = -np.conj(chi_prime(s, spec) * f + chi(s, spec) * df)
            else:
                out[neg] = np.conj(chi(s, spec) * f)
    return complex(out[0]) if scalar else out


def eval_ansatz(params: AnsatzParams, xi):
    """
    Evaluate S_A(xi).

    Non-NLS ansatz values at negative frequencies are the conjugates of the
    positive branch. xi = 0 returns 0 without touching the logarithm.

    Args:
        params: Ansatz parameters
        xi: Frequency (scalar or array)

    Returns:
        Complex value(s)
    """
    return _evaluate(params, xi, deriv=False)


def eval_ansatz_deriv(params: AnsatzParams, xi):
    """Exact derivative S_A'(xi) of ``eval_ansatz``."""
    return _evaluate(params, xi, deriv=True)
