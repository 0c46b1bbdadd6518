"""
Exception and warning types raised by the ssprofile library.
"""

from typing import List, Optional, Sequence


class SSProfileError(Exception):
    """Base class for every error raised by ssprofile."""


class ConfigurationError(SSProfileError, ValueError):
    """Invalid parameters: grids, kappa outside its interval, bad windows."""


class NumericalOverflowError(SSProfileError, ArithmeticError):
    """A sample is NaN or infinite.

    Args:
        message: Human readable description.
        node: Frequency (or position) at which the bad sample was found.
    """

    def __init__(self, message: str, node: Optional[float] = None):
        if node is not None:
            message = f"{message} (at node {node:.6g})"
        super().__init__(message)
        self.node = node


class DegenerateCriticalPointError(SSProfileError, ArithmeticError):
    """The Hessian of a phase is singular at the requested critical point."""


class NonConvergenceError(SSProfileError, RuntimeError):
    """An iteration did not reach its tolerance.

    Args:
        message: Human readable description.
        history: Successive distances (or residuals) recorded before giving up.
    """

    def __init__(self, message: str, history: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.history: List[float] = list(history or [])


class ProfileFormatError(SSProfileError, OSError):
    """A profile CSV or JSON sidecar is malformed."""


class QuadratureWarning(UserWarning):
    """An adaptive quadrature stopped before meeting its tolerance."""
