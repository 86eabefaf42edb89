"""Run configuration: INI files with typed, validated keys and recorded provenance.

Format (``configparser``)::

    [cutoff]
    kind = gaussian
    scale = 1.0

Arrays are comma-separated; lists of 3-vectors separate the vectors with
``;``.  Complex numbers use Python syntax (``0.5+1j``).  Any key can be
overridden by an environment variable ``SPINQED_<SECTION>_<KEY>`` (upper
case, dashes as underscores).  Every value remembers whether it came from
the defaults, the file or the environment.
"""

from __future__ import annotations

import configparser
import difflib
import io
import os
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import ConfigurationError

__all__ = ["RunConfig", "parse_config", "load_config", "serialize_config", "SCHEMA", "ENV_PREFIX"]

ENV_PREFIX = "SPINQED_"
REQUIRED = object()


def _float(s: str) -> float:
    return float(s)


def _int(s: str) -> int:
    return int(s)


def _str(s: str) -> str:
    return s.strip()


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _vec3(s: str) -> tuple:
    v = _floats(s)
    if len(v) != 3:
        raise ValueError("expected 3 comma-separated numbers")
    return v


def _vec3_list(s: str) -> tuple:
    return tuple(_vec3(part) for part in s.split(";") if part.strip())


def _complex(s: str) -> complex:
    return complex(s.replace(" ", ""))


def _complexes(s: str) -> tuple:
    return tuple(_complex(x) for x in s.split(",") if x.strip())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, complex):
        return repr(v).strip("()")
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return "; ".join(_fmt(x) for x in v)
        return ", ".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    check: Callable[[Any], bool] | None = None
    rule: str = ""


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


SCHEMA: dict[str, dict[str, Key]] = {
    "cutoff": {
        "kind": Key(_str, "gaussian", lambda v: v in ("gaussian", "compact-bump"),
                    "gaussian or compact-bump"),
        "scale": Key(_float, 1.0, _pos, "> 0"),
        "amplitude": Key(_float, 1.0, _nonneg, ">= 0"),
    },
    "grid": {
        "n_radial": Key(_int, 40, lambda v: v >= 2, ">= 2"),
        "max_r": Key(_float, 8.0, _pos, "> 0"),
        "n_polar": Key(_int, 12, _pos, "> 0"),
        "n_azimuth": Key(_int, 24, _pos, "> 0"),
    },
    "system": {
        "positions": Key(_vec3_list, ((0.0, 0.0, 0.0),), lambda v: len(v) >= 1, "at least one"),
        "b_ext": Key(_vec3, (0.0, 0.0, 1.0)),
    },
    "time": {
        "t_final": Key(_float, 10.0, _nonneg, ">= 0"),
        "dt": Key(_float, 1e-3, _pos, "> 0"),
        "n_samples": Key(_int, 101, lambda v: v >= 2, ">= 2"),
    },
    "hbar": {
        "value": Key(_float, 0.1, _pos, "> 0"),
        "list": Key(_floats, (0.2, 0.1, 0.05, 0.025),
                    lambda v: len(v) >= 3 and min(v) > 0, "at least 3 positive values"),
    },
    "spin": {
        "state": Key(_complexes, (1 + 0j, 0j), lambda v: np.linalg.norm(v) > 0, "non-zero"),
    },
    "field": {
        "kind": Key(_str, "zero", lambda v: v in ("zero", "narrowband"), "zero or narrowband"),
        "nu": Key(_float, 2.0, _pos, "> 0"),
        "eps": Key(_float, 0.2, _pos, "> 0"),
        "sign": Key(_int, 1, lambda v: v in (1, -1), "+1 or -1"),
        "amplitude": Key(_float, 1.0),
        "direction": Key(_vec3, (0.0, 0.0, 1.0)),
        "angular_width": Key(_float, 0.5, _pos, "> 0"),
        "tilt": Key(_float, 1.0, lambda v: abs(v) <= 1, "|tilt| <= 1"),
    },
    "oracle": {
        "observable": Key(_str, "spin:0:3"),
        "n_max": Key(_int, 12, lambda v: v >= 1, ">= 1"),
        "k": Key(_vec3, (0.0, 0.0, 2.0)),
        "weight": Key(_float, 2000.0, _pos, "> 0"),
        "polarization": Key(_str, "minus", lambda v: v in ("linear", "plus", "minus"),
                            "linear, plus or minus"),
        "amplitude": Key(_complex, 0j),
        "degree": Key(_int, 2, lambda v: v in (1, 2), "1 or 2"),
    },
    "bound": {
        "x": Key(_complex, REQUIRED),
        "z": Key(_str, "evolved"),
        "t": Key(_float, 1.0),
        "hbar": Key(_float, 0.5, _pos, "> 0"),
        "a": Key(_complexes, (1 + 0j, 0j)),
        "b": Key(_complexes, (1 + 0j, 0j)),
        "oracle": Key(_bool, True),
        "n_max": Key(_int, 40, lambda v: v >= 1, ">= 1"),
    },
    "output": {
        "precision": Key(_int, 12, lambda v: 1 <= v <= 17, "1..17"),
    },
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)  # section -> key -> value
    provenance: dict = field(default_factory=dict)  # (section, key) -> default|file|env

    def get(self, section: str, key: str):
        v = self.values[section][key]
        if v is REQUIRED:
            raise ConfigurationError(f"missing required key [{section}] {key}")
        return v

    def __getitem__(self, item):
        return self.get(*item)

    def defaulted(self, section: str, key: str) -> bool:
        return self.provenance[(section, key)] == "default"

    def header_lines(self) -> list[str]:
        out = []
        for sec, keys in self.values.items():
            for k, v in keys.items():
                if v is REQUIRED:
                    continue
                out.append(f"[{sec}] {k} = {_fmt(v)} ({self.provenance[(sec, k)]})")
        return out


def _nearest(word, options):
    m = difflib.get_close_matches(word, list(options), n=1, cutoff=0.0)
    return m[0] if m else None


def _parse_value(section, key, raw, origin):
    spec = SCHEMA[section][key]
    try:
        v = spec.parse(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"[{section}] {key} = {raw!r} ({origin}): {exc}") from None
    if spec.check is not None and not spec.check(v):
        raise ConfigurationError(f"[{section}] {key} = {raw!r} ({origin}) must be {spec.rule}")
    return v


def parse_config(text: str = "", env: dict | None = None) -> RunConfig:
    """Parse INI text, fill defaults, apply environment overrides and validate."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None
    cfg = RunConfig()
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigurationError(
                f"unknown section [{sec}]; did you mean [{_nearest(sec, SCHEMA)}]?")
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigurationError(
                    f"unknown key {key!r} in [{sec}]; did you mean {_nearest(key, SCHEMA[sec])!r}?")
    env = os.environ if env is None else env
    for sec, keys in SCHEMA.items():
        cfg.values[sec] = {}
        for key, spec in keys.items():
            env_name = f"{ENV_PREFIX}{sec}_{key}".upper().replace("-", "_")
            if env_name in env:
                v, origin = _parse_value(sec, key, env[env_name], "env"), "env"
            elif cp.has_option(sec, key):
                v, origin = _parse_value(sec, key, cp[sec][key], "file"), "file"
            else:
                v, origin = spec.default, "default"
            cfg.values[sec][key] = v
            cfg.provenance[(sec, key)] = origin
    known = {f"{ENV_PREFIX}{s}_{k}".upper().replace("-", "_") for s in SCHEMA for k in SCHEMA[s]}
    for name in env:
        if name.startswith(ENV_PREFIX) and name not in known:
            raise ConfigurationError(
                f"unknown override {name}; did you mean {_nearest(name, known)}?")
    return cfg


def load_config(path: str | None, env: dict | None = None) -> RunConfig:
    if path is None:
        return parse_config("", env)
    try:
        with open(path) as fh:
            return parse_config(fh.read(), env)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None


def serialize_config(cfg: RunConfig, only_explicit: bool = False) -> str:
    """INI text; parsing it back gives the same values."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for sec, keys in cfg.values.items():
        items = {k: _fmt(v) for k, v in keys.items()
                 if v is not REQUIRED and not (only_explicit and cfg.defaulted(sec, k))}
        if items:
            cp[sec] = items
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
