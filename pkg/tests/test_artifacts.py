"""
Tests for profile, field and manifest files.
"""

import json
import tempfile
from pathlib import Path

import numpy as np
import pytest

from ssprofile.ansatz import AnsatzParams
from ssprofile.artifacts import (
    RunManifest, load_json, read_field, read_profile, read_sweep, run_directory, save_json,
    write_field, write_profile, write_sweep)
from ssprofile.equations import EquationKind
from ssprofile.errors import ProfileFormatError
from ssprofile.fixedpoint import SolveConfig
from ssprofile.profile_space import sample_profile
from ssprofile.reconstruct import PhysicalField


def _profile(equation):
    cfg = SolveConfig(equation=equation)
    return sample_profile(cfg.grid(), lambda x: 0.01 * np.exp(-np.abs(x) + 0.3j * x),
                          lambda x: 0.01 * (-np.sign(x) + 0.3j) * np.exp(-np.abs(x) + 0.3j * x),
                          cfg.kappa, equation), cfg


def test_profile_files_reproduce_samples():
    """Samples survive the CSV exactly and the sidecar carries the solver settings."""
    profile, cfg = _profile(EquationKind.KDV4)
    params = AnsatzParams.build(EquationKind.KDV4, 0.01 + 0.002j)
    with tempfile.TemporaryDirectory() as tmp:
        csv_path, sidecar = write_profile(tmp, profile, params, cfg.to_dict())
        assert csv_path.read_text().splitlines()[0] == "xi,re_z,im_z,re_dz,im_dz"
        stored = read_profile(sidecar)
    assert np.array_equal(stored.profile.grid.nodes, profile.grid.nodes)
    assert np.array_equal(stored.profile.z_values, profile.z_values)
    assert np.array_equal(stored.profile.dz_values, profile.dz_values)
    assert stored.params.A == params.A
    assert stored.solver["equation"] == "kdv4"
    assert stored.report is None


def test_nls_negative_branch_is_stored():
    """Both half-lines of a two-sided profile come back."""
    profile, cfg = _profile(EquationKind.NLS)
    params = AnsatzParams.build(EquationKind.NLS, 0.01, nls_negative_sign=-1)
    with tempfile.TemporaryDirectory() as tmp:
        _, sidecar = write_profile(tmp, profile, params, cfg.to_dict())
        stored = read_profile(sidecar)
    assert np.array_equal(stored.profile.z_negative, profile.z_negative)
    assert np.array_equal(stored.profile.dz_negative, profile.dz_negative)


def test_identical_runs_write_identical_bytes():
    """Sorted keys and fixed number formatting make outputs reproducible."""
    profile, cfg = _profile(EquationKind.MBO)
    params = AnsatzParams.build(EquationKind.MBO, 0.01, 0.01)
    with tempfile.TemporaryDirectory() as tmp:
        first = write_profile(Path(tmp) / "a", profile, params, cfg.to_dict())
        second = write_profile(Path(tmp) / "b", profile, params, cfg.to_dict())
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()


def test_malformed_profile_files():
    """Bad headers, truncated tables and unknown versions are format errors."""
    profile, cfg = _profile(EquationKind.KDV4)
    params = AnsatzParams.build(EquationKind.KDV4, 0.01)
    with tempfile.TemporaryDirectory() as tmp:
        csv_path, sidecar = write_profile(tmp, profile, params, cfg.to_dict())
        lines = csv_path.read_text().splitlines()

        csv_path.write_text("\n".join(["xi,z"] + lines[1:]) + "\n")
        with pytest.raises(ProfileFormatError):
            read_profile(sidecar)

        csv_path.write_text("\n".join(lines[:-3]) + "\n")
        with pytest.raises(ProfileFormatError):
            read_profile(sidecar)

        csv_path.write_text("\n".join(lines) + "\n")
        meta = load_json(sidecar)
        meta["format_version"] = 99
        save_json(meta, sidecar)
        with pytest.raises(ProfileFormatError):
            read_profile(sidecar)

        with pytest.raises(FileNotFoundError):
            read_profile(Path(tmp) / "missing.json")


def test_load_json_rejects_non_objects():
    """Only JSON objects are accepted."""
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ProfileFormatError):
            load_json(path)
        path.write_text("{not json")
        with pytest.raises(ProfileFormatError):
            load_json(path)


def test_save_json_handles_numpy_and_complex():
    """Complex numbers become [re, im] pairs."""
    with tempfile.TemporaryDirectory() as tmp:
        path = save_json({"c": 1.0 - 2.0j, "n": np.int64(3), "v": np.arange(2.0)},
                         Path(tmp) / "out" / "x.json")
        data = json.loads(path.read_text())
    assert data == {"c": [1.0, -2.0], "n": 3, "v": [0.0, 1.0]}


def test_field_files():
    """Field samples and metadata are written side by side."""
    field = PhysicalField(x=np.linspace(-1.0, 1.0, 5), values=np.arange(5) + 0.5j, t=2.0,
                          equation=EquationKind.NLS, metadata={"window": 10.0})
    with tempfile.TemporaryDirectory() as tmp:
        csv_path, meta_path = write_field(tmp, field)
        x, values = read_field(csv_path)
        meta = load_json(meta_path)
    assert np.array_equal(x, field.x)
    assert np.array_equal(values, field.values)
    assert meta["t"] == 2.0
    assert meta["window"] == 10.0


def test_sweep_table_keeps_row_order():
    """Rows are written in the order given, iterations as integers."""
    rows = [{"c": 0.001 + 0j, "A": 0.001 + 1e-6j, "norm": 1e-9, "iterations": 3},
            {"c": -0.01 + 0j, "A": -0.0101 + 0j, "norm": 1e-6, "iterations": 5}]
    with tempfile.TemporaryDirectory() as tmp:
        path = write_sweep(Path(tmp) / "sweep.csv", rows)
        assert path.read_text().splitlines()[1].endswith(",3")
        table = read_sweep(path)
    assert table.shape == (2, 6)
    assert table[1, 0] == -0.01
    assert table[0, 3] == 1e-6


def test_run_directory_and_manifest():
    """Run directories are named by command and digest; manifests check their outputs."""
    with tempfile.TemporaryDirectory() as tmp:
        run_dir = run_directory(tmp, "solve", "0123456789abcdef")
        assert run_dir.name == "solve-0123456789ab"
        assert run_dir.is_dir()

        missing = str(run_dir / "profile.csv")
        with pytest.raises(ProfileFormatError):
            RunManifest("solve", "0123", outputs=[missing]).write(run_dir / "manifest.json")

        manifest = RunManifest("solve", "0123", outputs=[missing], status="not_converged")
        data = load_json(manifest.write(run_dir / "manifest.json"))
    assert data["status"] == "not_converged"
    assert set(data["versions"]) == {"ssprofile", "python", "numpy", "scipy"}
