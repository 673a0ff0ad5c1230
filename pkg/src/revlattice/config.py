"""Run configuration: TOML in, a frozen nested dict out.

Every key has a default below; unknown sections or keys are an error.
``REVLATTICE_CONFIG`` names the config file used when ``--config`` is absent.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from revlattice._parallel import max_workers

ENV_VAR = "REVLATTICE_CONFIG"

DEFAULTS = {
    "body": {"kind": "sphere", "a": 1.0, "b": 1.0, "coeffs": [1.0]},
    "lattice": {"guard": 1e-9, "t_min": 1.0, "t_max": 100.0, "step": 1.0},
    "arith": {"limit": 10**6, "lambdas": [50.0, 100.0, 200.0, 400.0]},
    "spectrum": {"eps0": 0.3, "coeff": "unit", "nodes_per_unit": 4, "t_min": 10.0,
                 "t_max": 30.0, "n": 20},
    "lemma": {"beta": 2**0.5, "c0": 1.0, "L": 3, "T": 1e4, "budget": 65536, "seed": 0,
              "n_instances": 50, "suite_T": 16.0, "xi_bound": 10.0, "grid_step": 0.0,
              "instance": {}},
    "run": {"workers": 0, "out": ""},
}

INSTANCE_KEYS = {"f", "lam", "Lambda", "L", "M", "T"}


class ConfigError(ValueError):
    pass


def _merge(base, override, where):
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}{key} must be a table")
            if key == "instance":
                extra = set(value) - INSTANCE_KEYS
                if extra:
                    raise ConfigError(f"unknown lemma.instance keys {sorted(extra)}")
                base[key] = dict(value)
            else:
                _merge(base[key], value, f"{where}{key}.")
        else:
            want = type(base[key])
            if want is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if want is list:
                if not isinstance(value, list):
                    raise ConfigError(f"{where}{key} must be an array")
                value = [float(v) for v in value]
            elif not isinstance(value, want) or (want is int and isinstance(value, bool)):
                raise ConfigError(f"{where}{key} must be {want.__name__}, got {value!r}")
            base[key] = value


def load_config(path=None, overrides=None):
    """Defaults, then the TOML file (``path`` or ``$REVLATTICE_CONFIG``), then ``overrides``."""
    cfg = copy.deepcopy(DEFAULTS)
    path = path or os.environ.get(ENV_VAR) or None
    if path:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        _merge(cfg, data, "")
    if overrides:
        _merge(cfg, overrides, "")
    if cfg["run"]["workers"] <= 0:
        cfg["run"]["workers"] = max_workers()
    return cfg


def canonical(cfg):
    """Stable JSON text of the config without the ``[run]`` section.

    Worker count and output path never change results, so they are left
    out of the hash and the header; that keeps CSVs byte-identical across
    worker counts and destinations.
    """
    shown = copy.deepcopy(cfg)
    shown.pop("run", None)
    return json.dumps(shown, sort_keys=True, separators=(",", ":"))


def config_hash(cfg):
    return hashlib.sha256(canonical(cfg).encode()).hexdigest()


def make_profile(cfg):
    from revlattice.body import RevolutionProfile

    b = cfg["body"]
    if b["kind"] == "sphere":
        return RevolutionProfile.sphere()
    if b["kind"] == "spheroid":
        return RevolutionProfile.spheroid(b["a"], b["b"])
    if b["kind"] == "fourier":
        return RevolutionProfile.fourier(b["coeffs"])
    raise ConfigError(f"unknown body kind {b['kind']!r}")
