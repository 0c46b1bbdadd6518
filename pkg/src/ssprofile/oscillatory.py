"""
Multilinear oscillatory convolution operators.

Every operator has the form

    N[f_1, ..., f_k](eta) = integral over eta_1 + ... + eta_k = eta of
        exp(-i tau Phi) * prod_j f_j(eta_j) |eta_j|**(-p)

with Phi = P(eta) - sum_j s_j P(eta_j). M (quartic KdV, p = 1/3), I (mBO,
p = 1/2, tau = -1), T (NLS, middle factor conjugated and reflected) and the
cubic mKdV operator are instances. Factors are multiplied by a smooth taper
at the truncation radius, so the panel engine, the spectral backend and the
brute-force oracle all compute the same truncated integral.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .ansatz import AnsatzParams, chi, eval_ansatz
from .config import thread_count
from .equations import EquationKind, ScalingLaw, law_for
from .errors import ConfigurationError, DegenerateCriticalPointError, QuadratureWarning
from .quadrature import axis_rule, panel_count, split_axis_rule

logger = logging.getLogger(__name__)

Factor = Callable[[np.ndarray], np.ndarray]

REGIONS = ("hh", "hll", "lhl", "llh", "lll")


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances, truncation and panel rules for oscillatory quadrature."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    truncation_radius: Optional[float] = None
    max_panel_depth: int = 4
    oscillation_resolution: int = 8
    gauss_order: int = 12
    max_nodes_per_axis: int = 4096
    taper_fraction: float = 0.8

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ConfigurationError("Quadrature tolerances must be positive")
        if self.oscillation_resolution < 4:
            raise ConfigurationError(
                f"oscillation_resolution must be at least 4, got {self.oscillation_resolution}")
        if self.truncation_radius is not None and self.truncation_radius <= 0:
            raise ConfigurationError("truncation_radius must be positive")
        if not (0 < self.taper_fraction < 1):
            raise ConfigurationError("taper_fraction must lie in (0, 1)")

    def radius(self, default: float) -> float:
        """Truncation radius, falling back to ``default`` (the grid far cut)."""
        return float(self.truncation_radius if self.truncation_radius is not None else default)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "QuadratureSpec":
        return cls(**{k: values[k] for k in cls.__dataclass_fields__ if k in values})


@dataclass
class QuadratureResult:
    """Value of one operator evaluation with its error bookkeeping."""

    value: complex
    error: float
    converged: bool
    panels: int
    regions: Dict[str, complex] = field(default_factory=dict)
    truncation_error: float = 0.0
    tail: complex = 0j

    def __complex__(self) -> complex:
        return complex(self.value)

    @property
    def truncated_value(self) -> complex:
        """The tapered integral without the tail term."""
        return self.value - self.tail

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": [self.value.real, self.value.imag],
            "error": self.error,
            "converged": self.converged,
            "panels": self.panels,
            "regions": {k: [v.real, v.imag] for k, v in self.regions.items()},
            "truncation_error": self.truncation_error,
            "tail": [self.tail.real, self.tail.imag],
        }


def taper(x, radius: float, fraction: float = 0.8):
    """Smooth window: 1 for |x| <= fraction*radius, 0 for |x| >= radius."""
    x = np.abs(np.asarray(x, dtype=float))
    start = fraction * radius
    t = np.clip((x - start) / (radius - start), 0.0, 1.0)
    return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)


def taper_slope(x, radius: float, fraction: float = 0.8):
    """Derivative of ``taper`` in x."""
    x = np.asarray(x, dtype=float)
    start = fraction * radius
    width = radius - start
    t = np.clip((np.abs(x) - start) / width, 0.0, 1.0)
    return -np.sign(x) * 30.0 * t ** 2 * (1.0 - t) ** 2 / width


def low_cutoff(x):
    """Unit-interval bump phi = 1 - chi(|x|) separating low from high frequencies."""
    return 1.0 - chi(np.abs(np.asarray(x, dtype=float)))


# Factor builders


def zero_factor() -> Factor:
    return lambda x: np.zeros(np.shape(x), dtype=complex)


def chi_factor(two_sided: bool = False) -> Factor:
    """The cutoff chi, optionally symmetrized to chi(x) + chi(-x)."""
    if two_sided:
        return lambda x: chi(x) + chi(-np.asarray(x))
    return lambda x: np.asarray(chi(x), dtype=float)


def ansatz_factor(params: AnsatzParams) -> Factor:
    return lambda x: eval_ansatz(params, x)


def profile_factor(profile=None, params: Optional[AnsatzParams] = None) -> Factor:
    """W = S_A + z from an ansatz and/or a sampled remainder."""
    def factor(x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros(flat.shape, dtype=complex)
        if params is not None:
            out += eval_ansatz(params, flat)
        if profile is not None:
            out += profile.evaluate(flat)
        return out.reshape(x.shape)
    return factor


def gaussian_factor(center: float = 0.0, width: float = 1.0, amplitude: complex = 1.0,
                    frequency: float = 0.0) -> Factor:
    """Smooth rapidly decaying test factor with an optional linear phase."""
    def factor(x):
        x = np.asarray(x, dtype=float)
        return amplitude * np.exp(-((x - center) / width) ** 2 + 1j * frequency * x)
    return factor


def conjugate_reflected(f: Factor) -> Factor:
    """x -> conj f(-x)."""
    return lambda x: np.conj(f(-np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class Integrand:
    """An operator instance: equation data plus one factor per slot."""

    equation: EquationKind
    factors: Tuple[Factor, ...]
    weights: Optional[Tuple[float, ...]] = None
    mkdv_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "equation", EquationKind.parse(self.equation))
        object.__setattr__(self, "factors", tuple(self.factors))
        k = self.law.nonlinearity_degree
        if len(self.factors) != k:
            raise ConfigurationError(
                f"{self.equation.value} takes {k} factors, got {len(self.factors)}")
        if self.weights is None:
            object.__setattr__(self, "weights", (float(self.law.weight_exponent),) * k)

    @property
    def law(self) -> ScalingLaw:
        return law_for(self.equation, self.mkdv_sign)

    @property
    def degree(self) -> int:
        return len(self.factors)

    def factor_values(self, j: int, x: np.ndarray) -> np.ndarray:
        """Factor j at x, with the conjugate reflection of a sign -1 slot."""
        x = np.asarray(x, dtype=float)
        if self.law.factor_signs[j] < 0:
            return np.conj(np.asarray(self.factors[j](-x), dtype=complex))
        return np.asarray(self.factors[j](x), dtype=complex)

    def phase(self, eta: float, points: Sequence[np.ndarray]) -> np.ndarray:
        law = self.law
        total = law.phase(eta)
        for s, x in zip(law.factor_signs, points):
            total = total - s * law.phase(x)
        return total

    def gradient_bound(self, radius: float) -> float:
        """Bound on |grad Phi| along any free axis inside the window."""
        if self.law.dispersion_order == 3:
            return 6.0 * radius ** 2
        return 4.0 * radius


def _panel_sum(integrand: Integrand, eta: float, radius: float, spec: QuadratureSpec,
               n_panels: int, with_regions: bool):
    """One fixed-layout pass of the nested panel rule."""
    law = integrand.law
    order = spec.gauss_order
    grading = law.singular_grading
    d = integrand.degree - 1
    tau = law.interaction_sign
    weights = integrand.weights

    outer_x, outer_w = axis_rule(-radius, radius, [0.0], n_panels, order, grading)
    fraction = spec.taper_fraction
    band_width = (1.0 - fraction) * radius
    signs = law.factor_signs
    last = integrand.degree - 1

    def weighted(j, x):
        values = integrand.factor_values(j, x)
        p = weights[j]
        if p:
            values = values * np.abs(x) ** (-p)
        return values

    sums = dict.fromkeys(REGIONS, 0j) if with_regions else {}
    total = 0j
    tail = 0j
    unresolved = 0.0

    def tail_terms(base, points, tapers):
        # 1 - prod T = sum_i (1 - T_i) prod_{m<i} T_m; each term is integrated by
        # parts once along the hyperplane direction that moves slot i (or slot 0
        # for the dependent slot) against the dependent slot
        slopes = [taper_slope(x, radius, fraction) for x in points]
        rates = [law.phase_derivative(x) for x in points]
        middle = np.prod(tapers[1:last], axis=0) if last > 1 else np.ones(base.shape)
        prefix = np.ones(base.shape)
        found, loose = 0j, 0.0
        for i in range(last + 1):
            if i < last:
                dh = -slopes[i] * prefix
                moving = i
            else:
                dh = slopes[last] * prefix + (1.0 - tapers[last]) * slopes[0] * middle
                moving = 0
            dphi = -signs[moving] * rates[moving] + signs[last] * rates[last]
            active = dh != 0.0
            resolved = active & (np.abs(dphi) * band_width >= 2.0 * np.pi)
            flat = active & ~resolved
            found += np.sum(base[resolved] * dh[resolved] / (1j * tau * dphi[resolved]))
            loose += float(np.sum(np.abs(base[flat] * dh[flat]))) * band_width
            prefix = prefix * tapers[i]
        return found, loose

    def accumulate(points, w):
        nonlocal total, tail, unresolved
        phase = integrand.phase(eta, points)
        base = np.exp(-1j * tau * phase) * w
        for j, x in enumerate(points):
            base = base * weighted(j, x)
        tapers = [taper(x, radius, fraction) for x in points]
        vals = base * np.prod(tapers, axis=0)
        total += vals.sum()
        found, loose = tail_terms(base, points, tapers)
        tail += found
        unresolved += loose
        if with_regions:
            lows = [low_cutoff(x) for x in points]
            highs = [1.0 - lo for lo in lows]
            parts = {
                "hll": highs[0] * lows[1] * lows[2],
                "lhl": lows[0] * highs[1] * lows[2],
                "llh": lows[0] * lows[1] * highs[2],
                "lll": lows[0] * lows[1] * lows[2],
            }
            rest = vals.sum()
            for name, mask in parts.items():
                part = (vals * mask).sum()
                sums[name] += part
                rest -= part
            sums["hh"] += rest

    if d == 2:
        x1 = outer_x[:, None]
        inner_x, inner_w = split_axis_rule(-radius, radius, eta - outer_x, n_panels, order, grading)
        x2 = inner_x
        x3 = eta - x1 - x2
        accumulate([np.broadcast_to(x1, x2.shape), x2, x3], outer_w[:, None] * inner_w)
    else:
        for x1, w1 in zip(outer_x, outer_w):
            x2 = outer_x[:, None]
            inner_x, inner_w = split_axis_rule(-radius, radius, eta - x1 - outer_x,
                                               n_panels, order, grading)
            x3 = inner_x
            x4 = eta - x1 - x2 - x3
            accumulate([np.full(x3.shape, x1), np.broadcast_to(x2, x3.shape), x3, x4],
                       w1 * outer_w[:, None] * inner_w)
    return total, sums, tail, unresolved


def eval_multilinear(integrand: Integrand, eta: float, spec: Optional[QuadratureSpec] = None,
                     radius: Optional[float] = None, with_regions: bool = False
                     ) -> QuadratureResult:
    """
    Adaptive panel evaluation of an operator at one output frequency.

    Panels are doubled globally until two successive layouts agree to
    ``max(rel_tol*|I|, abs_tol)``. The node layout never depends on the
    factor values, so the result is exactly multilinear in the factors.

    The taper removes the integrand beyond 0.8 L smoothly. The part it removes
    is estimated by one integration by parts, whose boundary term lives in the
    taper band and is summed on the same nodes. The estimate is added to
    ``value`` and kept in ``tail``. ``truncation_error`` is its size plus a
    bound for band points where the phase is too flat to integrate by parts.
    ``regions`` split the tapered part only.

    Args:
        integrand: Operator and factors
        eta: Output frequency
        spec: Quadrature settings
        radius: Truncation radius when ``spec.truncation_radius`` is unset
        with_regions: Also return the high/low region split

    Returns:
        QuadratureResult; ``converged`` is False (with a QuadratureWarning)
        when the tolerance is not met within ``max_panel_depth`` doublings or
        the per-axis node cap
    """
    spec = spec or QuadratureSpec()
    L = spec.radius(radius if radius is not None else 8.0)
    order = spec.gauss_order
    n = panel_count(L, integrand.gradient_bound(L), spec.oscillation_resolution, order)
    segments_inner = 4

    previous = _panel_sum(integrand, eta, L, spec, n, with_regions)
    depth = 0
    while True:
        if depth >= spec.max_panel_depth or segments_inner * 2 * n * order > spec.max_nodes_per_axis:
            total, regions, tail, unresolved = previous
            warnings.warn(
                f"Panel quadrature at eta={eta:.6g} stopped at {n} panels per segment "
                f"without an error estimate below tolerance", QuadratureWarning, stacklevel=2)
            return QuadratureResult(total + tail, float("inf") if depth == 0 else error, False,
                                    n, regions, abs(tail) + unresolved, tail)
        current = _panel_sum(integrand, eta, L, spec, 2 * n, with_regions)
        error = abs(current[0] + current[2] - previous[0] - previous[2])
        n *= 2
        depth += 1
        if error <= max(spec.rel_tol * abs(current[0] + current[2]), spec.abs_tol):
            total, regions, tail, unresolved = current
            logger.debug(f"eta={eta:.6g}: {n} panels, error {error:.3g}")
            return QuadratureResult(total + tail, error, True, n, regions, abs(tail) + unresolved,
                                    tail)
        previous = current


def eval_M(f1: Factor, f2: Factor, f3: Factor, f4: Factor, eta: float,
           q: Optional[QuadratureSpec] = None, radius: Optional[float] = None) -> QuadratureResult:
    """Quartic KdV operator M with weights |eta_j|^(-1/3)."""
    return eval_multilinear(Integrand(EquationKind.KDV4, (f1, f2, f3, f4)), eta, q, radius)


def eval_I(g1: Factor, g2: Factor, g3: Factor, eta: float,
           q: Optional[QuadratureSpec] = None, radius: Optional[float] = None) -> QuadratureResult:
    """mBO operator I; ``regions`` holds the hh, hll, lhl, llh and lll parts."""
    return eval_multilinear(Integrand(EquationKind.MBO, (g1, g2, g3)), eta, q, radius,
                            with_regions=True)


def eval_T(h1: Factor, h2: Factor, h3: Factor, eta: float,
           q: Optional[QuadratureSpec] = None, radius: Optional[float] = None) -> QuadratureResult:
    """NLS operator T; the middle factor enters as conj h2(-eta_2)."""
    return eval_multilinear(Integrand(EquationKind.NLS, (h1, h2, h3)), eta, q, radius)


def eval_cubic_mkdv(f1: Factor, f2: Factor, f3: Factor, eta: float,
                    q: Optional[QuadratureSpec] = None, radius: Optional[float] = None,
                    mkdv_sign: int = 1) -> QuadratureResult:
    """Cubic mKdV operator with phase eta^3 - sum eta_j^3 and no weights."""
    return eval_multilinear(Integrand(EquationKind.MKDV, (f1, f2, f3), mkdv_sign=mkdv_sign),
                            eta, q, radius)


def evaluate_many(integrand: Integrand, etas: Sequence[float],
                  spec: Optional[QuadratureSpec] = None, radius: Optional[float] = None,
                  with_regions: bool = False):
    """Evaluate at several frequencies concurrently; results in input order."""
    etas = list(etas)
    with ThreadPoolExecutor(max_workers=thread_count()) as executor:
        futures = [executor.submit(eval_multilinear, integrand, float(eta), spec, radius,
                                   with_regions) for eta in etas]
        return [future.result() for future in futures]


# Stationary phase


def _hessian(phase: Callable, point: np.ndarray, step: float) -> np.ndarray:
    """Central-difference Hessian with one Richardson step."""
    d = len(point)

    def estimate(h):
        hess = np.zeros((d, d))
        f0 = phase(point)
        for i in range(d):
            ei = np.zeros(d)
            ei[i] = h
            hess[i, i] = (phase(point + ei) - 2.0 * f0 + phase(point - ei)) / h ** 2
            for j in range(i + 1, d):
                ej = np.zeros(d)
                ej[j] = h
                value = (phase(point + ei + ej) - phase(point + ei - ej)
                         - phase(point - ei + ej) + phase(point - ei - ej)) / (4.0 * h ** 2)
                hess[i, j] = hess[j, i] = value
        return hess

    return (4.0 * estimate(step / 2.0) - estimate(step)) / 3.0


def stationary_phase_leading(phase: Callable, amplitude, point, lam: float,
                             hessian=None) -> complex:
    """
    Leading stationary-phase term of integral exp(i lam phi) psi at a critical point.

    Args:
        phase: phi, taking a point (array of length d) to a real number
        amplitude: psi, callable or the value psi(x0)
        point: The critical point x0
        lam: Large parameter
        hessian: Optional exact Hessian at x0 (array or callable)

    Returns:
        (2 pi)^(d/2) exp(i pi sgn/4) |det|^(-1/2) exp(i lam phi(x0)) psi(x0) lam^(-d/2)

    Raises:
        DegenerateCriticalPointError: If |det D^2 phi| < 1e-12
    """
    x0 = np.atleast_1d(np.asarray(point, dtype=float))
    d = len(x0)
    if hessian is None:
        hess = _hessian(phase, x0, 1e-4 * (1.0 + np.max(np.abs(x0))))
    else:
        hess = np.atleast_2d(np.asarray(hessian(x0) if callable(hessian) else hessian, dtype=float))
    eigs = np.linalg.eigvalsh(0.5 * (hess + hess.T))
    det = float(np.prod(eigs))
    if abs(det) < 1e-12:
        raise DegenerateCriticalPointError(
            f"Hessian determinant {det:.3g} at {x0.tolist()} is numerically zero")
    signature = int(np.sum(eigs > 0) - np.sum(eigs < 0))
    psi = amplitude(x0) if callable(amplitude) else amplitude
    value = ((2.0 * np.pi) ** (d / 2.0) * np.exp(1j * np.pi * signature / 4.0)
             * abs(det) ** -0.5 * np.exp(1j * lam * phase(x0)) * psi * lam ** (-d / 2.0))
    return complex(value)


def resonance_data(kind, point) -> Dict[str, Any]:
    """
    Scaled phase, Hessian determinant and signature at a resonance.

    The phase is restricted to the hyperplane sum(p) = 1 using the first k-1
    coordinates as free variables.
    """
    law = law_for(kind)
    p = np.asarray(point, dtype=float)
    k = len(p)

    def restricted(free):
        full = np.append(free, 1.0 - np.sum(free))
        return law.scaled_phase(full)

    # second derivatives of -sum s_j P(p_j) restricted to the hyperplane
    signs = np.asarray(law.factor_signs, dtype=float)
    if law.dispersion_order == 3:
        second = -signs * 6.0 * p
    elif law.kind == EquationKind.MBO:
        second = -signs * 2.0 * np.sign(p)
    else:
        second = -signs * 2.0 * np.ones(k)
    hess = np.diag(second[:-1]) + second[-1]
    eigs = np.linalg.eigvalsh(hess)
    return {
        "point": p.tolist(),
        "phase": restricted(p[:-1]),
        "determinant": float(np.prod(eigs)),
        "signature": int(np.sum(eigs > 0) - np.sum(eigs < 0)),
        "hessian": hess,
    }


# Brute-force oracle


def _trapezoid_weights(n: int, length: float) -> Tuple[np.ndarray, np.ndarray]:
    y = np.linspace(0.0, length, n + 1)
    w = np.full(n + 1, length / n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return y, w


def _oracle_level(integrand: Integrand, eta: float, radius: float, fraction: float,
                  n: int, grading: int, power: int) -> complex:
    """Tensor trapezoid with partition of unity over the dependent slot."""
    k = integrand.degree
    law = integrand.law
    weights = integrand.weights
    tau = law.interaction_sign
    ymax = radius ** (1.0 / grading)
    y, wy = _trapezoid_weights(n, ymax)
    total = 0j

    for dep in range(k):
        free = [j for j in range(k) if j != dep]
        for signs in np.ndindex(*(2,) * len(free)):
            sgn = [1.0 if s == 0 else -1.0 for s in signs]

            def axis(slot, idx):
                # x = sign * y**q; the Jacobian q y^(q-1) absorbs |x|^(-p)
                xs = sgn[idx] * y ** grading
                jac = grading * y ** (grading - 1.0 - grading * weights[slot])
                vals = integrand.factor_values(slot, xs) * taper(xs, radius, fraction)
                return xs, vals * jac * wy

            axes = [axis(slot, idx) for idx, slot in enumerate(free)]
            first_x, first_v = axes[0]
            rest = axes[1:]
            grids_x = np.meshgrid(*[a[0] for a in rest], indexing="ij")
            grids_v = np.meshgrid(*[a[1] for a in rest], indexing="ij")
            rest_x_sum = np.sum(grids_x, axis=0)
            rest_v = np.prod(grids_v, axis=0)
            rest_pow = np.sum([np.abs(g) ** power for g in grids_x], axis=0)
            for x1, v1 in zip(first_x, first_v):
                if v1 == 0:
                    continue
                xd = eta - x1 - rest_x_sum
                dep_vals = integrand.factor_values(dep, xd) * taper(xd, radius, fraction)
                denom = abs(x1) ** power + rest_pow + np.abs(xd) ** power
                rho = np.abs(xd) ** (power - weights[dep]) / denom
                points = [None] * k
                points[dep] = xd
                points[free[0]] = np.full(xd.shape, x1)
                for idx, slot in enumerate(free[1:]):
                    points[slot] = grids_x[idx]
                phase = integrand.phase(eta, points)
                total += v1 * np.sum(np.exp(-1j * tau * phase) * rest_v * dep_vals * rho)
    return total


def oracle_bruteforce(integrand: Integrand, eta: float, spec: Optional[QuadratureSpec] = None,
                      radius: Optional[float] = None, resolution: int = 32,
                      levels: Optional[int] = None) -> complex:
    """
    Independent reference value by non-adaptive tensor trapezoid rules.

    Each half-axis is mapped by x = +-y^q so the |x|^(-p) weight becomes
    smooth; a partition of unity |x_j|^4 / sum_i |x_i|^4 lets each slot act
    as the dependent variable in turn, which keeps the moving plane x_j = 0
    away from the free axes. Romberg extrapolation over ``levels`` halvings
    of the step removes the leading error terms.

    Args:
        integrand: Operator and factors
        eta: Output frequency (nonzero)
        spec: Supplies the truncation radius and taper
        radius: Truncation radius when the quadrature settings give none (at most 50)
        resolution: Nodes per phase period (at least 32)
        levels: Romberg levels (default 3 for two free axes, 2 for three)

    Returns:
        The reference value
    """
    spec = spec or QuadratureSpec()
    L = spec.radius(radius if radius is not None else 8.0)
    if L > 50:
        raise ConfigurationError(f"Oracle truncation radius must be at most 50, got {L}")
    resolution = max(32, int(resolution))
    grading = integrand.law.singular_grading
    d = integrand.degree - 1
    levels = levels or (3 if d == 2 else 2)

    ymax = L ** (1.0 / grading)
    slope = integrand.gradient_bound(L) * grading * ymax ** (grading - 1)
    n = max(16, int(np.ceil(ymax * slope * resolution / (2.0 * np.pi))))

    table = [_oracle_level(integrand, eta, L, spec.taper_fraction, n * 2 ** lev, grading, 4)
             for lev in range(levels)]
    # Romberg: successive eliminations of h^2, h^4, ...
    for order in range(1, levels):
        factor = 4.0 ** order
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0)
                 for i in range(len(table) - 1)]
    logger.debug(f"Oracle at eta={eta:.6g}: {n} base nodes per half-axis, {levels} levels")
    return complex(table[0])
