"""
Frequency grids, sampled remainders and the weighted norms Z^kappa / Y^kappa.

A ``Profile`` stores the remainder z and its derivative z' on the positive
nodes of a ``FrequencyGrid``. Negative frequencies are reconstructed by the
Hermitian rule z(-xi) = conj z(xi), except for NLS where the values at the
mirrored nodes are stored explicitly.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .equations import EquationKind
from .errors import ConfigurationError, NumericalOverflowError

logger = logging.getLogger(__name__)

# Relative distance under which two grid nodes are treated as one.
NODE_TOLERANCE = 1e-9
# Decay exponents of the far tail model are clipped to this range.
TAIL_EXPONENT_RANGE = (0.0, 5.0)


@dataclass(frozen=True)
class GridConfig:
    """Parameters of the frequency grid."""

    near_zero_cut: float = 1e-3
    far_cut: float = 1e3
    nodes_per_decade: int = 32
    linear_step: float = 1.0 / 64.0

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "GridConfig":
        return cls(**{k: values[k] for k in cls.__dataclass_fields__ if k in values})


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing positive nodes: linear on (0, 1], logarithmic overall."""

    nodes: np.ndarray
    near_zero_cut: float
    far_cut: float
    nodes_per_decade: int
    linear_step: float

    def __len__(self) -> int:
        return len(self.nodes)

    def describe(self) -> Dict[str, Any]:
        """Layout descriptor stored in profile sidecars."""
        return {
            "near_zero_cut": self.near_zero_cut,
            "far_cut": self.far_cut,
            "nodes_per_decade": self.nodes_per_decade,
            "linear_step": self.linear_step,
            "size": len(self.nodes),
        }


def build_grid(config: Optional[GridConfig] = None, **overrides) -> FrequencyGrid:
    """
    Build the frequency grid.

    Logarithmic nodes ``near * 10**(j/density)`` run from the near cut to the
    far cut; a linear block of multiples of ``linear_step`` covers (0, 1] so
    that 1/2 and 1 are exact nodes.

    Args:
        config: Grid parameters (defaults when omitted)
        **overrides: Individual ``GridConfig`` fields

    Returns:
        The grid

    Raises:
        ConfigurationError: On non-positive or inverted cuts, or fewer than 16
            nodes per decade
    """
    config = config or GridConfig()
    if overrides:
        config = GridConfig(**{**config.__dict__, **overrides})
    near, far = float(config.near_zero_cut), float(config.far_cut)
    density = int(config.nodes_per_decade)
    step = float(config.linear_step)

    if near <= 0:
        raise ConfigurationError(f"near_zero_cut must be positive, got {near}")
    if far <= 1:
        raise ConfigurationError(f"far_cut must exceed 1, got {far}")
    if far <= near:
        raise ConfigurationError(f"far_cut ({far}) must exceed near_zero_cut ({near})")
    if density < 16:
        raise ConfigurationError(f"nodes_per_decade must be at least 16, got {density}")
    if not (0 < step <= 0.5):
        raise ConfigurationError(f"linear_step must lie in (0, 1/2], got {step}")

    count = int(np.floor(np.log10(far / near) * density))
    log_nodes = near * 10.0 ** (np.arange(count + 1) / density)
    log_nodes = log_nodes[log_nodes < far * (1.0 - NODE_TOLERANCE)]
    log_nodes = np.append(log_nodes, far)

    linear_nodes = step * np.arange(1, int(round(1.0 / step)) + 1)
    linear_nodes = linear_nodes[linear_nodes >= near * (1.0 - NODE_TOLERANCE)]

    # exact linear nodes win over nearby logarithmic ones
    values = np.concatenate([linear_nodes, log_nodes])
    priority = np.concatenate([np.ones(len(linear_nodes)), np.zeros(len(log_nodes))])
    order = np.lexsort((-priority, values))
    kept = []
    for idx in order:
        node = values[idx]
        if kept and abs(node - kept[-1][0]) <= NODE_TOLERANCE * node:
            if priority[idx] > kept[-1][1]:
                kept[-1] = (node, priority[idx])
            continue
        kept.append((node, priority[idx]))
    nodes = np.array([k[0] for k in kept])

    logger.debug(f"Built grid with {len(nodes)} nodes on [{nodes[0]:.3g}, {nodes[-1]:.3g}]")
    return FrequencyGrid(nodes=nodes, near_zero_cut=float(nodes[0]), far_cut=far,
                         nodes_per_decade=density, linear_step=step)


class _BranchInterpolant:
    """Monotone cubic interpolation of one sign branch of z and z'."""

    def __init__(self, nodes: np.ndarray, z: np.ndarray, dz: np.ndarray,
                 log_model: bool, kappa: float):
        self.nodes = nodes
        self.z = z
        self.dz = dz
        self.log_model = log_model
        low = nodes <= 1.0
        high = nodes >= 1.0
        self.low = self._pair(nodes[low], z[low], dz[low]) if low.sum() >= 2 else None
        self.high = (self._pair(np.log(nodes[high]), z[high], dz[high])
                     if high.sum() >= 2 else None)
        self.tail_exponent, self.tail_coefficient = fit_tail(nodes, z, kappa)

    @staticmethod
    def _pair(x, z, dz):
        return (PchipInterpolator(x, z.real), PchipInterpolator(x, z.imag),
                PchipInterpolator(x, dz.real), PchipInterpolator(x, dz.imag))

    def __call__(self, s: np.ndarray, deriv: bool, sign: float) -> np.ndarray:
        """Evaluate at magnitudes ``s`` > 0 on the branch with the given sign."""
        out = np.zeros(s.shape, dtype=complex)
        first, last = self.nodes[0], self.nodes[-1]
        offset = 2 if deriv else 0

        below = s < first
        if np.any(below):
            if self.log_model:
                # xi z'(xi) frozen at the first node
                rate = sign * first * self.dz[0]
                if deriv:
                    out[below] = rate / (sign * s[below])
                else:
                    out[below] = self.z[0] + rate * np.log(s[below] / first)
            else:
                if deriv:
                    out[below] = self.dz[0]
                else:
                    out[below] = self.z[0] + sign * self.dz[0] * (s[below] - first)

        beyond = s > last
        if np.any(beyond):
            value = self.tail_coefficient * s[beyond] ** (-self.tail_exponent)
            out[beyond] = -self.tail_exponent * value / (sign * s[beyond]) if deriv else value

        inside = ~below & ~beyond
        low = inside & (s <= 1.0)
        high = inside & (s > 1.0)
        for mask, pair, x in ((low, self.low, s), (high, self.high, np.log(np.where(s > 0, s, 1.0)))):
            if not np.any(mask):
                continue
            if pair is None:
                src = self.dz if deriv else self.z
                out[mask] = np.interp(s[mask], self.nodes, src.real) + 1j * np.interp(
                    s[mask], self.nodes, src.imag)
                continue
            out[mask] = pair[offset](x[mask]) + 1j * pair[offset + 1](x[mask])

        # exact node hits return the stored samples
        idx = np.searchsorted(self.nodes, s)
        hit = (idx < len(self.nodes)) & (self.nodes[np.minimum(idx, len(self.nodes) - 1)] == s)
        if np.any(hit):
            src = self.dz if deriv else self.z
            out[hit] = src[idx[hit]]
        return out


def fit_tail(nodes: np.ndarray, z: np.ndarray, kappa: float) -> Tuple[float, complex]:
    """
    Tail model z ~ C s^(-p) over the last decade of nodes.

    p is the least-squares slope of log|z|; C is then the complex least-squares
    coefficient over the same nodes. Too few usable nodes give p = kappa with C
    anchored at the last sample.
    """
    last = nodes[-1]
    window = (nodes >= last / 10.0) & (nodes > 1.0)
    mags = np.abs(z[window])
    if window.sum() < 4 or np.any(mags <= 0) or not np.all(np.isfinite(mags)):
        return float(kappa), complex(z[-1] * last ** kappa)
    slope = np.polyfit(np.log(nodes[window]), np.log(mags), 1)[0]
    p = float(np.clip(-slope, *TAIL_EXPONENT_RANGE))
    basis = nodes[window] ** (-p)
    return p, complex(np.dot(basis, z[window]) / np.dot(basis, basis))


@dataclass(frozen=True, eq=False)
class Profile:
    """
    The remainder z and its derivative sampled on a grid.

    For NLS, ``z_negative`` and ``dz_negative`` hold z(-xi_j) and z'(-xi_j).
    Instances are immutable; iterations build new profiles.
    """

    grid: FrequencyGrid
    z_values: np.ndarray
    dz_values: np.ndarray
    kappa: float
    equation: EquationKind = EquationKind.KDV4
    z_negative: Optional[np.ndarray] = None
    dz_negative: Optional[np.ndarray] = None
    _positive: Any = field(init=False, repr=False, compare=False, default=None)
    _negative: Any = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        n = len(self.grid.nodes)
        object.__setattr__(self, "equation", EquationKind.parse(self.equation))
        object.__setattr__(self, "z_values", np.asarray(self.z_values, dtype=complex))
        object.__setattr__(self, "dz_values", np.asarray(self.dz_values, dtype=complex))
        if self.z_values.shape != (n,) or self.dz_values.shape != (n,):
            raise ConfigurationError(f"Profile samples must have shape ({n},)")
        two_sided = self.equation == EquationKind.NLS
        if two_sided:
            zn = np.zeros(n, dtype=complex) if self.z_negative is None else self.z_negative
            dzn = np.zeros(n, dtype=complex) if self.dz_negative is None else self.dz_negative
            object.__setattr__(self, "z_negative", np.asarray(zn, dtype=complex))
            object.__setattr__(self, "dz_negative", np.asarray(dzn, dtype=complex))
            if self.z_negative.shape != (n,) or self.dz_negative.shape != (n,):
                raise ConfigurationError(f"Negative-branch samples must have shape ({n},)")
        object.__setattr__(self, "_positive", _BranchInterpolant(
            self.grid.nodes, self.z_values, self.dz_values, two_sided, self.kappa))
        if two_sided:
            object.__setattr__(self, "_negative", _BranchInterpolant(
                self.grid.nodes, self.z_negative, self.dz_negative, True, self.kappa))

    @property
    def hermitian(self) -> bool:
        return self.equation != EquationKind.NLS

    @property
    def tail_exponent(self) -> float:
        """Fitted decay exponent used beyond the far cut."""
        return self._positive.tail_exponent

    def tail_model(self, sign: float = 1.0) -> Tuple[float, complex]:
        """``(p, C)`` with z(xi) ~ C |xi|^(-p) beyond the far cut on the branch of ``sign``."""
        if sign > 0:
            return self._positive.tail_exponent, self._positive.tail_coefficient
        if self.hermitian:
            return self._positive.tail_exponent, complex(np.conj(self._positive.tail_coefficient))
        return self._negative.tail_exponent, self._negative.tail_coefficient

    def evaluate(self, xi):
        """Interpolated z(xi); scalar in, scalar out."""
        return self._evaluate(xi, deriv=False)

    def evaluate_deriv(self, xi):
        """Interpolated z'(xi)."""
        return self._evaluate(xi, deriv=True)

    def _evaluate(self, xi, deriv: bool):
        scalar = np.ndim(xi) == 0
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.zeros(xi.shape, dtype=complex)
        pos = xi > 0
        neg = xi < 0
        zero = xi == 0
        if np.any(pos):
            out[pos] = self._positive(xi[pos], deriv, 1.0)
        if np.any(neg):
            if self.hermitian:
                mirrored = self._positive(-xi[neg], deriv, 1.0)
                out[neg] = -np.conj(mirrored) if deriv else np.conj(mirrored)
            else:
                out[neg] = self._negative(-xi[neg], deriv, -1.0)
        if np.any(zero):
            if self.hermitian:
                out[zero] = self._positive(np.full(zero.sum(), 1e-300), deriv, 1.0)
            # the NLS remainder may be log-singular at 0; report 0 there
        return complex(out[0]) if scalar else out

    def samples(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All stored samples as (xi, z, z'), both signs, ascending in xi."""
        nodes = self.grid.nodes
        if self.hermitian:
            xi = np.concatenate([-nodes[::-1], nodes])
            z = np.concatenate([np.conj(self.z_values[::-1]), self.z_values])
            dz = np.concatenate([-np.conj(self.dz_values[::-1]), self.dz_values])
        else:
            xi = np.concatenate([-nodes[::-1], nodes])
            z = np.concatenate([self.z_negative[::-1], self.z_values])
            dz = np.concatenate([self.dz_negative[::-1], self.dz_values])
        return xi, z, dz

    def replace(self, z_values, dz_values, z_negative=None, dz_negative=None) -> "Profile":
        """New profile on the same grid with other samples."""
        return Profile(grid=self.grid, z_values=z_values, dz_values=dz_values,
                       kappa=self.kappa, equation=self.equation,
                       z_negative=z_negative, dz_negative=dz_negative)

    def scaled(self, factor: complex) -> "Profile":
        """The profile multiplied by a complex constant."""
        return self.combine(None, factor, 0.0)

    def combine(self, other: Optional["Profile"], alpha: complex, beta: complex) -> "Profile":
        """Return alpha * self + beta * other (``other`` may be None)."""
        def mix(a, b):
            if a is None:
                return None
            return alpha * a + (beta * b if b is not None else 0.0)

        o = other or self
        if other is not None and len(other.grid) != len(self.grid):
            raise ConfigurationError("Profiles live on different grids")
        return self.replace(mix(self.z_values, o.z_values if other else None),
                            mix(self.dz_values, o.dz_values if other else None),
                            mix(self.z_negative, o.z_negative if other else None),
                            mix(self.dz_negative, o.dz_negative if other else None))

    def conjugate_reflected(self) -> "Profile":
        """The profile xi -> conj z(-xi), which is itself for Hermitian profiles."""
        if self.hermitian:
            return self.replace(np.conj(self.z_values), np.conj(self.dz_values))
        return self.replace(np.conj(self.z_negative), -np.conj(self.dz_negative),
                            np.conj(self.z_values), -np.conj(self.dz_values))


def zero_profile(grid: FrequencyGrid, kappa: float, equation=EquationKind.KDV4) -> Profile:
    """The identically vanishing remainder."""
    n = len(grid.nodes)
    return Profile(grid=grid, z_values=np.zeros(n, dtype=complex),
                   dz_values=np.zeros(n, dtype=complex), kappa=kappa, equation=equation)


def sample_profile(grid: FrequencyGrid, z: Callable, dz: Callable, kappa: float,
                   equation=EquationKind.KDV4) -> Profile:
    """Sample closed-form z and z' (vectorized callables) on a grid."""
    equation = EquationKind.parse(equation)
    nodes = grid.nodes
    kwargs = {}
    if equation == EquationKind.NLS:
        kwargs = {"z_negative": np.asarray(z(-nodes), dtype=complex),
                  "dz_negative": np.asarray(dz(-nodes), dtype=complex)}
    return Profile(grid=grid, z_values=np.asarray(z(nodes), dtype=complex),
                   dz_values=np.asarray(dz(nodes), dtype=complex), kappa=kappa,
                   equation=equation, **kwargs)


@dataclass(frozen=True)
class NormReport:
    """Weighted sup norms of a profile and where they are attained."""

    sup_weighted_value: float
    sup_weighted_deriv: float
    arg_max_value: float
    arg_max_deriv: float
    norm_total: float
    parts: Tuple[float, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sup_weighted_value": self.sup_weighted_value,
            "sup_weighted_deriv": self.sup_weighted_deriv,
            "arg_max_value": self.arg_max_value,
            "arg_max_deriv": self.arg_max_deriv,
            "norm_total": self.norm_total,
            "parts": list(self.parts),
        }

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "NormReport":
        return cls(sup_weighted_value=float(values["sup_weighted_value"]),
                   sup_weighted_deriv=float(values["sup_weighted_deriv"]),
                   arg_max_value=float(values["arg_max_value"]),
                   arg_max_deriv=float(values["arg_max_deriv"]),
                   norm_total=float(values["norm_total"]),
                   parts=tuple(float(p) for p in values.get("parts", ())))


def _check_finite(xi: np.ndarray, *arrays: np.ndarray) -> None:
    for values in arrays:
        bad = ~np.isfinite(values)
        if np.any(bad):
            node = float(xi[np.argmax(bad)])
            raise NumericalOverflowError("Non-finite profile sample", node=node)


def _sup(xi: np.ndarray, weighted: np.ndarray) -> Tuple[float, float]:
    if len(weighted) == 0:
        return 0.0, float("nan")
    k = int(np.argmax(weighted))
    return float(weighted[k]), float(xi[k])


def weighted_norm_Z(p: Profile, kappa: Optional[float] = None) -> NormReport:
    """
    Z^kappa norm: sup <xi>^kappa |z| plus sup <xi>^(kappa+1) |z'|.

    Args:
        p: Profile to measure
        kappa: Weight exponent (defaults to ``p.kappa``); the MBO contraction
            metric passes kappa - delta here

    Returns:
        The norm report
    """
    kappa = p.kappa if kappa is None else kappa
    xi, z, dz = p.samples()
    _check_finite(xi, z, dz)
    bracket = np.sqrt(1.0 + xi ** 2)
    value, at_value = _sup(xi, bracket ** kappa * np.abs(z))
    deriv, at_deriv = _sup(xi, bracket ** (kappa + 1.0) * np.abs(dz))
    return NormReport(value, deriv, at_value, at_deriv, value + deriv)


def weighted_norm_Y(p: Profile, kappa: Optional[float] = None) -> NormReport:
    """
    Y^kappa norm with its logarithmic allowance at zero frequency.

    The four parts are sup_{|xi|<1} |z| / max(1, |log|xi||), sup_{|xi|<1}
    |xi z'|, sup_{|xi|>=1} <xi>^kappa |z| and sup_{|xi|>=1} <xi>^(kappa+1)
    |z'|. Nodes at |xi| = 1 belong to the high branch.
    """
    kappa = p.kappa if kappa is None else kappa
    xi, z, dz = p.samples()
    _check_finite(xi, z, dz)
    a = np.abs(xi)
    low = a < 1.0
    high = ~low
    log_weight = np.maximum(1.0, np.abs(np.log(a[low])))
    part1, at1 = _sup(xi[low], np.abs(z[low]) / log_weight)
    part2, at2 = _sup(xi[low], np.abs(xi[low] * dz[low]))
    bracket = np.sqrt(1.0 + a[high] ** 2)
    part3, at3 = _sup(xi[high], bracket ** kappa * np.abs(z[high]))
    part4, at4 = _sup(xi[high], bracket ** (kappa + 1.0) * np.abs(dz[high]))
    value = part1 + part3
    deriv = part2 + part4
    at_value = at1 if part1 >= part3 else at3
    at_deriv = at2 if part2 >= part4 else at4
    return NormReport(value, deriv, at_value, at_deriv, value + deriv,
                      parts=(part1, part2, part3, part4))


def profile_norm(p: Profile, kappa: Optional[float] = None) -> NormReport:
    """The norm an equation is measured in: Y^kappa for NLS, Z^kappa otherwise."""
    if p.equation == EquationKind.NLS:
        return weighted_norm_Y(p, kappa)
    return weighted_norm_Z(p, kappa)
