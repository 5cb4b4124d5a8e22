"""Run configuration: TOML file, defaults, environment overrides."""
from __future__ import annotations

import dataclasses
import difflib
import json
import os
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError, MissingRequired, ParseError, UnknownKey

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_PREFIX = "RISKGEN_"
DGP_KINDS = ("garch_normal", "garch_t", "cir")


@dataclass(frozen=True)
class RunConfig:
    """Every recognised key; TOML tables only group them, names are unique across tables."""

    # data
    dataset: str = None
    dgp: str = None
    dgp_paths: int = 1
    dgp_years: int = 30
    dgp_seed: int = 1
    t_nu: float = 5.0
    return_mode: str = "absolute"
    scaler_type: str = "standard"
    condition_length: int = 10
    sequence_length: int = 10
    split_fraction: float = 0.8
    split_seed: int = 0
    # run
    models: tuple = ("PHS",)
    n_synthetic: int = 1000
    seed: int = 0
    output_dir: str = "runs/latest"
    jobs: int = 1
    # estimation
    hs_window: int = 251
    ewma_decay: float = 0.94
    ar_window: int = 1260
    garch_window: int = 756
    refit_every: int = 251
    subperiod_days: int = 502
    # neural models (0 means "model default")
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 0.0
    noise_dim: int = 0
    clip_value: float = 0.0
    layers: tuple = (64, 64, 64)
    lstm_hidden: int = 32
    model_params: dict = field(default_factory=dict)

    def validate(self):
        from .registry import MODEL_NAMES

        if (self.dataset is None) == (self.dgp is None):
            raise MissingRequired("exactly one of 'dataset' or 'dgp' must be set")
        if self.dgp is not None and self.dgp not in DGP_KINDS:
            raise ConfigError(f"dgp must be one of {DGP_KINDS}, got {self.dgp!r}")
        if self.dataset is not None and not Path(self.dataset).exists():
            raise ConfigError(f"dataset file not found: {self.dataset}")
        for m in self.models:
            if m not in MODEL_NAMES:
                hint = difflib.get_close_matches(m, MODEL_NAMES, n=1)
                raise UnknownKey(f"unknown model {m!r}" + (f"; did you mean {hint[0]!r}?" if hint else ""))
        for m in self.model_params:
            if m not in MODEL_NAMES:
                raise UnknownKey(f"model_params for unknown model {m!r}")
        if self.return_mode not in ("absolute", "log"):
            raise ConfigError("return_mode must be 'absolute' or 'log'")
        if self.scaler_type not in ("standard", "minmax"):
            raise ConfigError("scaler_type must be 'standard' or 'minmax'")
        if not 0 < self.split_fraction < 1:
            raise ConfigError("split_fraction must lie in (0, 1)")
        for name in ("condition_length", "sequence_length", "n_synthetic", "hs_window", "refit_every",
                     "epochs", "batch_size", "jobs", "dgp_paths", "dgp_years"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["models"] = list(self.models)
        d["layers"] = list(self.layers)
        return d


KEYS = {f.name: f for f in fields(RunConfig)}


def _coerce(name, value):
    default = KEYS[name].default
    if name in ("models", "layers"):
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        value = tuple(int(v) for v in value) if name == "layers" else tuple(str(v) for v in value)
        return value
    if name == "model_params":
        if isinstance(value, str):
            value = json.loads(value)
        return {k: dict(v) for k, v in value.items()}
    if default is None or isinstance(default, str):
        return None if value in (None, "") else str(value)
    if isinstance(default, bool):
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def _unknown(key):
    hint = difflib.get_close_matches(key, list(KEYS), n=1)
    return UnknownKey(f"unknown config key {key!r}" + (f"; nearest match {hint[0]!r}" if hint else ""))


def _flatten(doc: dict) -> dict:
    flat = {}
    for key, val in doc.items():
        if key == "model_params":
            flat[key] = val
        elif isinstance(val, dict):
            for k, v in val.items():
                if k in flat:
                    raise ConfigError(f"key {k!r} given twice")
                flat[k] = v
        else:
            flat[key] = val
    return flat


def config_from_mapping(mapping: dict, base: RunConfig = None, env=None, overrides=None, base_dir=None) -> RunConfig:
    """Build a validated config: file values, then ``RISKGEN_*`` env vars, then explicit overrides."""
    flat = _flatten(mapping)
    if base_dir is not None and flat.get("dataset") and not Path(flat["dataset"]).is_absolute():
        cand = Path(base_dir) / flat["dataset"]
        if cand.exists():
            flat["dataset"] = str(cand)
    values = {}
    for key, val in flat.items():
        if key not in KEYS:
            raise _unknown(key)
        values[key] = _coerce(key, val)
    env = os.environ if env is None else env
    for var, val in env.items():
        if var.startswith(ENV_PREFIX):
            key = var[len(ENV_PREFIX):].lower()
            if key not in KEYS:
                raise _unknown(key)
            values[key] = _coerce(key, val)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in KEYS:
            raise _unknown(key)
        values[key] = _coerce(key, val)
    cfg = dataclasses.replace(base or RunConfig(), **values)
    return cfg.validate()


def load_config(path, env=None, **overrides) -> RunConfig:
    """Read a TOML run file (or a run ``manifest.json``), apply env and keyword overrides."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        doc = json.loads(text)
        doc = doc.get("config", doc)
    else:
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
            if line is None:
                m = re.search(r"line (\d+), column (\d+)", str(exc))
                line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
            raise ParseError(f"{path}: {exc}", line=line, column=col) from None
    return config_from_mapping(doc, env=env, overrides=overrides, base_dir=path.parent)
