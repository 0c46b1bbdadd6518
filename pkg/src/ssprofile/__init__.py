"""
ssprofile - small self-similar profiles of mKdV, quartic KdV, mBO and cubic NLS.
"""

# Numerical modules are imported on first use so that the CLI help stays fast

__version__ = "0.1.0"


def solve(equation="kdv4", amplitude=0.0, **settings):
    """Lazy wrapper around ``fixedpoint.picard_solve``; returns (profile, params, report)."""
    from .fixedpoint import SolveConfig, picard_solve
    return picard_solve(SolveConfig(equation=equation, amplitude=amplitude, **settings))


def verify(names, solution=None):
    """Lazy wrapper around ``verify.run_checks``."""
    from .verify import run_checks
    return run_checks(names, solution=solution)
