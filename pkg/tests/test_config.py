"""
Tests for the configuration layer.
"""

import json
import os
import tempfile

import pytest

from ssprofile.config import (
    DEFAULT_CONFIG, config_digest, deep_merge, load_config, thread_count)
from ssprofile.errors import ConfigurationError


def test_load_config_defaults():
    """Without a file the defaults are returned unchanged."""
    config = load_config()
    assert config == DEFAULT_CONFIG
    assert config is not DEFAULT_CONFIG


def test_load_config_merges_file_and_overrides():
    """File values merge over defaults and flag overrides win over both."""
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "run.json")
        with open(path, "w") as f:
            json.dump({"solver": {"equation": "mbo", "kappa": 0.2}}, f)
        config = load_config(path, {"solver": {"kappa": 0.15, "amplitude": None}})

    assert config["solver"]["equation"] == "mbo"
    assert config["solver"]["kappa"] == 0.15
    assert config["solver"]["amplitude"] == DEFAULT_CONFIG["solver"]["amplitude"]
    assert config["grid"] == DEFAULT_CONFIG["grid"]


def test_load_config_rejects_unknown_keys():
    """Typos in section or key names are configuration errors."""
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "bad.json")
        with open(path, "w") as f:
            json.dump({"solver": {"kapa": 0.3}}, f)
        with pytest.raises(ConfigurationError):
            load_config(path)

    with pytest.raises(ConfigurationError):
        load_config(overrides={"nonsense": {"x": 1}})


def test_load_config_missing_file():
    """An unreadable file is reported as a configuration error."""
    with pytest.raises(ConfigurationError):
        load_config("/nonexistent/run.json")


def test_deep_merge_does_not_mutate():
    """Merging leaves both inputs untouched."""
    base = {"a": {"b": 1, "c": 2}}
    update = {"a": {"c": 3}}
    merged = deep_merge(base, update)
    assert merged == {"a": {"b": 1, "c": 3}}
    assert base == {"a": {"b": 1, "c": 2}}


def test_config_digest_is_order_independent():
    """The digest depends on content, not key order."""
    assert config_digest({"a": 1, "b": 2}) == config_digest({"b": 2, "a": 1})
    assert config_digest({"a": 1}) != config_digest({"a": 2})


def test_thread_count_env(monkeypatch):
    """SSPROFILE_THREADS caps the pool size and is validated."""
    monkeypatch.setenv("SSPROFILE_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("SSPROFILE_THREADS", "0")
    with pytest.raises(ConfigurationError):
        thread_count()
    monkeypatch.delenv("SSPROFILE_THREADS")
    assert 1 <= thread_count() <= 8
