from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from spinqed.config import SCHEMA, load_config, parse_config, serialize_config
from spinqed.errors import ConfigurationError

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.ini"))


def test_empty_cutoff_section_defaults():
    cfg = parse_config("[cutoff]\n", env={})
    assert cfg["cutoff", "kind"] == "gaussian"
    assert cfg["cutoff", "scale"] == 1.0
    assert cfg.defaulted("cutoff", "kind") and cfg.defaulted("cutoff", "scale")


def test_negative_hbar():
    with pytest.raises(ConfigurationError, match="hbar"):
        parse_config("[hbar]\nvalue = -0.1\n", env={})


@pytest.mark.parametrize("text", ["[grid]\nn_radial = 1\n", "[time]\ndt = 0\n",
                                  "[cutoff]\nkind = box\n", "[field]\ntilt = 2\n",
                                  "[grid]\nn_radial = many\n", "not an ini"])
def test_invalid_values(text):
    with pytest.raises(ConfigurationError):
        parse_config(text, env={})


def test_unknown_key_suggests():
    with pytest.raises(ConfigurationError, match="n_radial"):
        parse_config("[grid]\nn_radail = 10\n", env={})
    with pytest.raises(ConfigurationError, match=r"\[cutoff\]"):
        parse_config("[cutof]\nscale = 1\n", env={})


def test_missing_required_key():
    cfg = parse_config("", env={})
    with pytest.raises(ConfigurationError, match=r"\[bound\] x"):
        cfg["bound", "x"]


def test_env_override():
    cfg = parse_config("[hbar]\nvalue = 0.3\n", env={"SPINQED_HBAR_VALUE": "0.05"})
    assert cfg["hbar", "value"] == 0.05
    assert cfg.provenance[("hbar", "value")] == "env"
    with pytest.raises(ConfigurationError, match="SPINQED_HBAR_VALUE"):
        parse_config("", env={"SPINQED_HBAR_VALEU": "0.05"})


def test_provenance_in_header():
    cfg = parse_config("[grid]\nn_radial = 20\n", env={})
    lines = cfg.header_lines()
    assert "[grid] n_radial = 20 (file)" in lines
    assert "[grid] max_r = 8.0 (default)" in lines


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.name)
def test_round_trip_shipped(path):
    cfg = load_config(str(path), env={})
    again = parse_config(serialize_config(cfg), env={})
    assert again.values == cfg.values
    explicit = parse_config(serialize_config(cfg, only_explicit=True), env={})
    assert explicit.values == cfg.values


def test_missing_file():
    with pytest.raises(ConfigurationError):
        load_config("/nonexistent/run.ini", env={})


@given(st.floats(1e-6, 1e6), st.integers(2, 500), st.complex_numbers(max_magnitude=1e3))
def test_round_trip_property(hbar, n, amp):
    text = f"[hbar]\nvalue = {hbar!r}\n[grid]\nn_radial = {n}\n[oracle]\namplitude = {amp!r}\n"
    cfg = parse_config(text, env={})
    assert parse_config(serialize_config(cfg), env={}).values == cfg.values


def test_every_default_valid():
    cfg = parse_config("", env={})
    for sec, keys in SCHEMA.items():
        for key in keys:
            assert cfg.defaulted(sec, key)
