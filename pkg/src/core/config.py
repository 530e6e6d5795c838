# src/core/config.py

import copy
import os
import yaml

DEFAULTS = {
    "tolerances": {
        "commutation": 1e-9,
        "hermitian": 1e-9,
        "norm_warn": 1e-6,
        "rank": 1e-8,
        "invariance": 1e-9,
        "certificate": 1e-10,
        "ground_space": 1e-9,
        "deterministic": 1e-6,
    },
    "caps": {
        "dense_max_qubits": 16,
        "sparse_max_qubits": 24,
        "statevector_max_qubits": 20,
        "ribbon_budget": 8,
    },
    "partition": {
        "block_factor": 7,
    },
    "run": {
        "backend": "auto",
        "workers": 1,
    },
    "logging": {
        "level": "INFO",
    },
}


def _merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: str = None) -> dict:
    """
    Load config/config.yaml (or an explicit path) merged over the defaults.
    """
    explicit = path is not None
    if path is None:
        current_dir = os.path.dirname(os.path.abspath(__file__))
        path = os.path.join(current_dir, "..", "..", "config", "config.yaml")

    if not os.path.exists(path):
        if explicit:
            raise FileNotFoundError(f"Config file not found at: {path}")
        return copy.deepcopy(DEFAULTS)

    with open(path, "r") as f:
        loaded = yaml.safe_load(f) or {}

    return _merge(DEFAULTS, loaded)


def tolerance(config: dict, name: str) -> float:
    return float((config or DEFAULTS)["tolerances"][name])


def cap(config: dict, name: str) -> int:
    return int((config or DEFAULTS)["caps"][name])
