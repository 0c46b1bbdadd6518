"""
Reading and writing run artifacts.

Profiles are stored as a CSV table ``xi,re_z,im_z,re_dz,im_dz`` (ascending
xi, both signs) next to a JSON sidecar holding the grid layout, the ansatz
parameters, the solver settings and the solve report. Physical fields are
CSV tables ``x,re_u,im_u`` with a JSON metadata file. All JSON is written
indented with sorted keys and all numbers with 17 significant digits, so
identical runs give byte-identical files.
"""

import json
import logging
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy

from .ansatz import AnsatzParams
from .equations import EquationKind
from .errors import ConfigurationError, ProfileFormatError
from .profile_space import NODE_TOLERANCE, Profile, build_grid
from .reconstruct import PhysicalField

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
PROFILE_COLUMNS = ("xi", "re_z", "im_z", "re_dz", "im_dz")
FIELD_COLUMNS = ("x", "re_u", "im_u")
SWEEP_COLUMNS = ("re_c", "im_c", "re_A", "im_A", "norm", "iterations")
NUMBER_FORMAT = "%.17g"

PathLike = Union[str, Path]


def _json_default(value):
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def save_json(data: Dict[str, Any], path: PathLike) -> Path:
    """Write ``data`` as indented, key-sorted JSON and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return path


def load_json(path: PathLike) -> Dict[str, Any]:
    """Read a JSON object, raising ``ProfileFormatError`` on any failure."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError) as e:
        raise ProfileFormatError(f"Cannot read {path}: {e}") from e
    if not isinstance(data, dict):
        raise ProfileFormatError(f"{path} must hold a JSON object")
    return data


def _write_table(path: Path, columns: Sequence[str], table: np.ndarray, fmt=NUMBER_FORMAT) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.asarray(table, dtype=float).reshape(-1, len(columns))
    np.savetxt(path, table, delimiter=",", header=",".join(columns), comments="", fmt=fmt)
    return path


def _read_table(path: Path, columns: Sequence[str]) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().strip()
    except FileNotFoundError:
        raise
    except OSError as e:
        raise ProfileFormatError(f"Cannot read {path}: {e}") from e
    if header != ",".join(columns):
        raise ProfileFormatError(
            f"{path}: expected header '{','.join(columns)}', found '{header}'")
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as e:
        raise ProfileFormatError(f"{path}: {e}") from e
    if table.size == 0:
        return np.zeros((0, len(columns)))
    if table.shape[1] != len(columns):
        raise ProfileFormatError(f"{path}: rows must have {len(columns)} columns")
    if not np.all(np.isfinite(table)):
        raise ProfileFormatError(f"{path}: non-finite entries")
    return table


@dataclass
class StoredProfile:
    """A profile read back from disk with everything stored beside it."""

    profile: Profile
    params: AnsatzParams
    solver: Dict[str, Any]
    report: Optional[Dict[str, Any]]
    sidecar: Path


def write_profile(directory: PathLike, profile: Profile, params: AnsatzParams,
                  solver: Optional[Dict[str, Any]] = None, report=None,
                  stem: str = "profile") -> Tuple[Path, Path]:
    """
    Store a profile as CSV plus JSON sidecar.

    Args:
        directory: Output directory (created when missing)
        profile: Remainder samples
        params: Ansatz parameters
        solver: ``SolveConfig.to_dict()`` of the run
        report: Optional ``SolveReport`` (or its dict form)
        stem: Base name of both files

    Returns:
        ``(csv path, sidecar path)``
    """
    directory = Path(directory)
    xi, z, dz = profile.samples()
    table = np.column_stack([xi, z.real, z.imag, dz.real, dz.imag])
    csv_path = _write_table(directory / f"{stem}.csv", PROFILE_COLUMNS, table)
    if report is not None and hasattr(report, "to_dict"):
        report = report.to_dict()
    sidecar = {
        "format_version": FORMAT_VERSION,
        "equation": profile.equation.value,
        "kappa": profile.kappa,
        "grid": profile.grid.describe(),
        "ansatz": params.to_dict(),
        "solver": solver or {},
        "report": report,
        "csv": csv_path.name,
    }
    sidecar_path = save_json(sidecar, directory / f"{stem}.json")
    logger.info(f"Wrote profile to {csv_path} and {sidecar_path}")
    return csv_path, sidecar_path


def read_profile(sidecar_path: PathLike) -> StoredProfile:
    """
    Load a profile written by ``write_profile``.

    Raises:
        FileNotFoundError: If the sidecar or its CSV is missing
        ProfileFormatError: If either file is malformed or they disagree
    """
    sidecar_path = Path(sidecar_path)
    meta = load_json(sidecar_path)
    try:
        version = int(meta.get("format_version", 0))
        grid_meta = meta["grid"]
        grid = build_grid(near_zero_cut=float(grid_meta["near_zero_cut"]),
                          far_cut=float(grid_meta["far_cut"]),
                          nodes_per_decade=int(grid_meta["nodes_per_decade"]),
                          linear_step=float(grid_meta["linear_step"]))
        params = AnsatzParams.from_dict(meta["ansatz"])
        kappa = float(meta["kappa"])
        equation = meta["equation"]
        csv_name = meta["csv"]
    except (KeyError, TypeError, ValueError) as e:
        raise ProfileFormatError(f"{sidecar_path}: incomplete sidecar ({e})") from e
    if version != FORMAT_VERSION:
        raise ProfileFormatError(f"{sidecar_path}: unsupported format version {version}")

    table = _read_table(sidecar_path.parent / csv_name, PROFILE_COLUMNS)
    n = len(grid)
    if table.shape[0] != 2 * n:
        raise ProfileFormatError(
            f"{csv_name}: expected {2 * n} rows for the stored grid, found {table.shape[0]}")
    xi = table[:, 0]
    if np.any(np.diff(xi) <= 0):
        raise ProfileFormatError(f"{csv_name}: xi must be strictly increasing")
    positive = table[n:]
    negative = table[:n][::-1]
    nodes = grid.nodes
    if not (np.allclose(positive[:, 0], nodes, rtol=NODE_TOLERANCE, atol=0.0)
            and np.allclose(-negative[:, 0], nodes, rtol=NODE_TOLERANCE, atol=0.0)):
        raise ProfileFormatError(f"{csv_name}: nodes do not match the sidecar grid")

    z = positive[:, 1] + 1j * positive[:, 2]
    dz = positive[:, 3] + 1j * positive[:, 4]
    extra = {}
    try:
        if EquationKind.parse(equation) == EquationKind.NLS:
            extra = {"z_negative": negative[:, 1] + 1j * negative[:, 2],
                     "dz_negative": negative[:, 3] + 1j * negative[:, 4]}
        profile = Profile(grid=grid, z_values=z, dz_values=dz, kappa=kappa,
                          equation=equation, **extra)
    except ConfigurationError as e:
        raise ProfileFormatError(f"{sidecar_path}: {e}") from e
    logger.debug(f"Read {n}-node {profile.equation.value} profile from {sidecar_path}")
    return StoredProfile(profile=profile, params=params, solver=meta.get("solver") or {},
                         report=meta.get("report"), sidecar=sidecar_path)


def write_field(directory: PathLike, physical: PhysicalField,
                stem: str = "field") -> Tuple[Path, Path]:
    """Store a PhysicalField as ``x,re_u,im_u`` CSV plus JSON metadata."""
    directory = Path(directory)
    values = np.asarray(physical.values, dtype=complex)
    table = np.column_stack([physical.x, values.real, values.imag])
    csv_path = _write_table(directory / f"{stem}.csv", FIELD_COLUMNS, table)
    meta_path = save_json(physical.to_dict(), directory / f"{stem}.json")
    logger.info(f"Wrote field at t={physical.t:g} to {csv_path}")
    return csv_path, meta_path


def read_field(csv_path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """Read a field CSV back as ``(x, values)``."""
    table = _read_table(Path(csv_path), FIELD_COLUMNS)
    return table[:, 0], table[:, 1] + 1j * table[:, 2]


def write_samples(path: PathLike, xi: np.ndarray, z: np.ndarray, dz: np.ndarray) -> Path:
    """Write evaluated remainder samples with the profile CSV header."""
    z = np.asarray(z, dtype=complex)
    dz = np.asarray(dz, dtype=complex)
    table = np.column_stack([xi, z.real, z.imag, dz.real, dz.imag])
    return _write_table(Path(path), PROFILE_COLUMNS, table)


def write_sweep(path: PathLike, rows: List[Dict[str, Any]]) -> Path:
    """
    Write the sweep table, one row per solve in the given order.

    Each row holds ``c`` and ``A`` (complex), ``norm`` and ``iterations``.
    """
    ordered = list(rows)
    table = np.array([[r["c"].real, r["c"].imag, r["A"].real, r["A"].imag, r["norm"],
                       r["iterations"]] for r in ordered], dtype=float)
    fmt = [NUMBER_FORMAT] * 5 + ["%d"]
    return _write_table(Path(path), SWEEP_COLUMNS, table.reshape(-1, len(SWEEP_COLUMNS)), fmt)


def read_sweep(path: PathLike) -> np.ndarray:
    return _read_table(Path(path), SWEEP_COLUMNS)


def versions() -> Dict[str, str]:
    """Versions of the interpreter and the numerical stack."""
    from . import __version__

    return {
        "ssprofile": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def run_directory(root: PathLike, command: str, digest: str) -> Path:
    """Directory ``<root>/<command>-<digest prefix>`` for one run, created on demand."""
    path = Path(root) / f"{command}-{digest[:12]}"
    path.mkdir(parents=True, exist_ok=True)
    return path


@dataclass
class RunManifest:
    """Provenance record written at the end of every command."""

    command: str
    config_digest: str
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    versions: Dict[str, str] = field(default_factory=versions)
    wall_time: float = 0.0
    verdicts: List[Dict[str, Any]] = field(default_factory=list)
    status: str = "ok"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "versions": dict(self.versions),
            "wall_time": self.wall_time,
            "verdicts": list(self.verdicts),
            "status": self.status,
        }

    def write(self, path: PathLike) -> Path:
        """Save the manifest; a successful run must name only existing outputs."""
        if self.status == "ok":
            missing = [p for p in self.outputs if not Path(p).exists()]
            if missing:
                raise ProfileFormatError(f"Manifest names missing outputs: {', '.join(missing)}")
        return save_json(self.to_dict(), path)
