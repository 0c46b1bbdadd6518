"""
Panel quadrature rules.

Composite Gauss-Legendre rules whose panel next to an integrable singularity
is graded by the substitution x = a + h t**q.
"""

import logging
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

logger = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def panel_count(length: float, gradient: float, resolution: int, order: int) -> int:
    """
    Panels needed so that ``resolution`` nodes fall in each phase period.

    Args:
        length: Length of the integration segment
        gradient: Bound on the phase gradient along the segment
        resolution: Nodes per period
        order: Gauss-Legendre nodes per panel

    Returns:
        At least one panel
    """
    periods = length * gradient / (2.0 * np.pi)
    return max(1, int(np.ceil(periods * resolution / order)))


def segment_rule(a, b, n_panels: int, order: int, grading: int = 1,
                 singular: Optional[str] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite rule on [a, b] (arrays broadcast to shape (m,)).

    The panel touching the ``singular`` end ("left" or "right") uses the
    graded map t -> t**grading; the others are uniform.

    Returns:
        ``(x, w)`` of shape (m, n_panels * order)
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    t, wt = gauss_legendre(order)
    h = (b - a) / n_panels

    offsets = np.repeat(np.arange(n_panels, dtype=float), order)
    local = np.tile(t, n_panels)
    local_w = np.tile(wt, n_panels)
    if singular is not None and grading > 1:
        local[:order] = t ** grading
        local_w[:order] = grading * t ** (grading - 1) * wt
    u = offsets + local  # position in panel units from the singular end

    if singular == "right":
        x = b[:, None] - h[:, None] * u[None, :]
    else:
        x = a[:, None] + h[:, None] * u[None, :]
    w = np.abs(h)[:, None] * local_w[None, :]
    return x, w


def axis_rule(lo: float, hi: float, breaks: Sequence[float], n_panels: int, order: int,
              grading: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    One-dimensional rule on [lo, hi] broken at ``breaks``.

    Each segment is graded towards the break points it touches; a segment
    touching two of them is split at its midpoint.
    """
    points = sorted({float(p) for p in breaks if lo < p < hi})
    edges = [lo] + points + [hi]
    singular = set(points)
    xs, ws = [], []
    for left, right in zip(edges[:-1], edges[1:]):
        pieces = []
        if left in singular and right in singular:
            mid = 0.5 * (left + right)
            pieces = [(left, mid, "left"), (mid, right, "right")]
        elif left in singular:
            pieces = [(left, right, "left")]
        elif right in singular:
            pieces = [(left, right, "right")]
        else:
            pieces = [(left, right, None)]
        for a, b, side in pieces:
            x, w = segment_rule(a, b, n_panels, order, grading, side)
            xs.append(x[0])
            ws.append(w[0])
    return np.concatenate(xs), np.concatenate(ws)


def split_axis_rule(lo: float, hi: float, anchor: np.ndarray, n_panels: int, order: int,
                    grading: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rules on [lo, hi] broken at 0 and at a per-row ``anchor``.

    Used for the innermost axis, whose second singular point moves with the
    outer variables. Every row has the same node count; segments collapsing
    to zero length get zero weights.

    Returns:
        ``(x, w)`` of shape (len(anchor), 4 * n_panels * order)
    """
    anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
    p1 = np.clip(np.minimum(0.0, anchor), lo, hi)
    p2 = np.clip(np.maximum(0.0, anchor), lo, hi)
    mid = 0.5 * (p1 + p2)
    lo_arr = np.full_like(anchor, lo)
    hi_arr = np.full_like(anchor, hi)
    parts = [
        segment_rule(lo_arr, p1, n_panels, order, grading, "right"),
        segment_rule(p1, mid, n_panels, order, grading, "left"),
        segment_rule(mid, p2, n_panels, order, grading, "right"),
        segment_rule(p2, hi_arr, n_panels, order, grading, "left"),
    ]
    return (np.concatenate([p[0] for p in parts], axis=1),
            np.concatenate([p[1] for p in parts], axis=1))
