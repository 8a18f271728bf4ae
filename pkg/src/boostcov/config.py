"""Run configuration: defaults, merging and validation."""

import copy
import json
from pathlib import Path

SUITE_NAMES = ("symbols", "kernels", "rp", "periodize", "thermal", "gaussian", "fock")

DEFAULTS = {
    "seed": 20240501,
    "suites": list(SUITE_NAMES),
    "symbols": {
        "mass": 1.0, "samples": 10_000, "span": 10.0,
        "velocities": [0.0, 0.1, -0.1, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9], "dims": [2, 3],
    },
    "kernels": {"mass": 1.0, "velocities": [0.0, 0.3, 0.6], "grid": 64, "tol": 1e-6},
    "rp": {
        "mass": 1.0, "members": 20, "seeds": [0, 1, 2, 3, 4], "velocities": [0.0, 0.6, -0.6],
        "isometry_tol": 1e-6,
    },
    "periodize": {
        "mass": 1.0, "beta": 2.0, "velocity": 0.6, "n_max": 64, "matsubara": 10_000, "triple_tol": 1e-8,
        "rho_betas": [0.5, 2.0, 8.0], "rho_velocities": [0.0, 0.3, 0.6, -0.9],
        "lengths": [4.0, 8.0, 16.0, 32.0], "members": 20,
    },
    "thermal": {
        "mass": 1.0, "beta": 2.0, "length": 6.283185307179586, "mode_cutoff": 16,
        "velocities": [0.0, 0.6], "kms_tol": 1e-10, "modular_tol": 1e-12, "isometry_tol": 1e-8,
    },
    "gaussian": {
        "mass": 1.0, "velocity": 0.6, "wick_tol": 1e-12, "dual_tol": 1e-10, "max_power": 4,
        "field_samples": 1000,
    },
    "fock": {
        "mass": 1.0, "length": 6.283185307179586, "coupling": 0.1, "reference": [3, 6],
        "refinement": [[4, 8]], "velocities": [0.0, 0.3, -0.3, 0.6, -0.6], "dim_cap": 20_000,
        "refinement_cap": 30_000, "spectrum_tol": 1e-8, "beta": 2.0, "gibbs_particles": 12,
        "kms_tol": 1e-10, "lemma_trials": 1000, "fk_times": [0.0, 0.5, 1.0], "fk_tol": 1e-8,
    },
}


class ConfigError(ValueError):
    pass


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def _numbers(value, where):
    items = value if isinstance(value, list) else [value]
    for x in items:
        if isinstance(x, list):
            _numbers(x, where)
        elif isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"{where!r} must be numeric")


def validate(cfg):
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    if not isinstance(cfg["suites"], list) or any(s not in SUITE_NAMES for s in cfg["suites"]):
        raise ConfigError(f"suites must be a list drawn from {', '.join(SUITE_NAMES)}")
    for name in SUITE_NAMES:
        for key, val in cfg[name].items():
            where = f"{name}.{key}"
            _numbers(val, where)
            flat = val if isinstance(val, list) else [val]
            if key.endswith("tol") and val < 0:
                raise ConfigError(f"tolerance {where!r} must be non-negative")
            if key in ("mass", "beta", "length") and val <= 0:
                raise ConfigError(f"{where!r} must be positive")
            if "velocit" in key and any(abs(v) >= 1 for v in flat):
                raise ConfigError(f"{where!r} must lie in (-1, 1)")
    return cfg


def load(path=None, overrides=None):
    """Defaults, then the JSON file at ``path``, then ``overrides``; validated."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, data)
    if overrides:
        cfg = _merge(cfg, overrides)
    return validate(cfg)
