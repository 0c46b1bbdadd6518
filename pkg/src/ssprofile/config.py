"""
Run configuration: defaults, JSON loading, overrides and digests.
"""

import copy
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

# Defaults for every configurable section. Keys mirror the dataclasses that
# consume them (GridConfig, QuadratureSpec, SolveConfig, ReconstructConfig).
DEFAULT_CONFIG = {
    "grid": {
        "near_zero_cut": 1e-3,
        "far_cut": 1e3,
        "nodes_per_decade": 32,
        "linear_step": 1.0 / 64.0,
    },
    "quadrature": {
        "rel_tol": 1e-6,
        "abs_tol": 1e-10,
        "truncation_radius": None,  # None: use the grid far_cut
        "max_panel_depth": 4,
        "oscillation_resolution": 8,
        "gauss_order": 12,
        "max_nodes_per_axis": 4096,
    },
    "solver": {
        "equation": "kdv4",
        "kappa": None,  # None: per-equation default
        "amplitude": 0.0,
        "picard_tol": 1e-8,
        "max_iters": 40,
        "damping": 1.0,
        "backend": "spectral",
        "window": None,  # None: per-equation default
        "far_cut": None,  # None: 1e3 or the window when larger
        "nodes_per_decade": 32,
        "near_zero_cut": 1e-3,
        "inner_tol": 1e-10,
        "max_inner_iters": 60,
        "inversion_tol": 1e-8,
        "max_inversion_steps": 20,
        "smallness": 0.1,
        "mkdv_sign": 1,
        "distance_delta": 0.02,
    },
    "reconstruct": {
        "x_max": 50.0,
        "x_nodes": 401,
        "synthesis_cut": None,  # None: from the stationary frequencies of the x range
        "synthesis_tol": 1e-6,
        "crosscheck_window": 400.0,
        "crosscheck_modes": 8192,
        "crosscheck_steps": 200,
    },
}

THREADS_ENV = "SSPROFILE_THREADS"


def deep_merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge ``update`` into a copy of ``base``, recursing into nested dicts.

    Args:
        base: Dictionary holding defaults
        update: Dictionary whose values win

    Returns:
        New merged dictionary
    """
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path: Optional[str] = None,
                overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> Dict[str, Any]:
    """
    Load a JSON run configuration merged over ``DEFAULT_CONFIG``.

    Args:
        path: Optional JSON file with any subset of the default sections
        overrides: Scalar overrides per section (``None`` values are ignored),
            typically collected from command-line flags

    Returns:
        The merged configuration dictionary

    Raises:
        ConfigurationError: If the file is unreadable, not a JSON object, or
            names an unknown section or key
    """
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                loaded = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read config {path}: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"Config {path} must hold a JSON object")
        _check_known(loaded)
        config = deep_merge(config, loaded)
        logger.info(f"Loaded configuration from {path}")

    for section, values in (overrides or {}).items():
        cleaned = {k: v for k, v in values.items() if v is not None}
        _check_known({section: cleaned})
        config[section].update(cleaned)
    return config


def _check_known(candidate: Dict[str, Any]) -> None:
    for section, values in candidate.items():
        if section not in DEFAULT_CONFIG:
            raise ConfigurationError(f"Unknown config section '{section}'")
        if not isinstance(values, dict):
            raise ConfigurationError(f"Config section '{section}' must be an object")
        unknown = sorted(set(values) - set(DEFAULT_CONFIG[section]))
        if unknown:
            raise ConfigurationError(
                f"Unknown keys in section '{section}': {', '.join(unknown)}")


def config_digest(config: Dict[str, Any]) -> str:
    """Return the SHA-256 hex digest of the canonical JSON form of ``config``."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def thread_count() -> int:
    """
    Worker count for thread pools, capped by ``SSPROFILE_THREADS``.

    Returns:
        A positive integer, ``min(8, cpu_count)`` when the variable is unset
    """
    default = min(8, os.cpu_count() or 1)
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got '{raw}'") from e
    if value < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be at least 1, got {value}")
    return value


def write_config(config: Dict[str, Any], path: Path) -> Path:
    """Write ``config`` as indented, key-sorted JSON and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return path
