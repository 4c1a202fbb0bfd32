"""Service configuration: one TOML file, overridable via MVFORGE_* env vars."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8331
    data_dir: str = "mvforge-data"
    model_single: str = None  # path to a single_chart bundle; fresh seeded model if unset
    model_mv: str = None
    seed: int = 0
    deterministic: bool = False  # logical clocks and counter session ids
    pool_cap: int = None
    upload_limit_bytes: int = 20 * 1024 * 1024
    api_token: str = None


_BOOL_TRUE = {"1", "true", "yes", "on"}


def _coerce(name: str, raw: str):
    if name in ("port", "seed", "pool_cap", "upload_limit_bytes"):
        return int(raw)
    if name == "deterministic":
        return raw.strip().lower() in _BOOL_TRUE
    return raw


def load_config(path=None, env=None) -> ServiceConfig:
    """Read the TOML config (if any), then apply MVFORGE_* overrides."""
    env = os.environ if env is None else env
    values = {}
    if path is not None:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
        known = {f.name for f in fields(ServiceConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)
    for f in fields(ServiceConfig):
        key = f"MVFORGE_{f.name.upper()}"
        if key in env:
            values[f.name] = _coerce(f.name, env[key])
    return ServiceConfig(**values)
