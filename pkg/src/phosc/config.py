"""Run configuration: JSON file validated against the bundled schema,
deep-merged over defaults. Unknown keys are rejected by the schema
(additionalProperties: false), so typos fail loudly instead of silently
falling back to defaults.

Seed precedence (strongest first): --seed flag, PHOSC_SEED environment
variable, config file, built-in default 0.
"""

from __future__ import annotations

import json
import os
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError

SEED_ENV_VAR = "PHOSC_SEED"

DEFAULTS: dict = {
    "seed": 0,
    "corpus": {
        "num_seen": 200,
        "num_unseen": 50,
        "num_styles": 4,
        "train_copies": 12,
        "wordlist": None,
    },
    "signature": {
        "phos_levels": [1, 2, 3, 4, 5],
        "phoc_levels": [2, 3, 4, 5],
        "occupancy_threshold": 0.5,
    },
    "arch": {
        "conv_channels": [16, 32, 48],
        "spp_levels": [1, 2, 4],
        "head_hidden": 256,
        "lstm_hidden": 128,
        "lstm_layers": 2,
    },
    "train": {
        "lr": 1e-4,
        "ctc_lr": 1e-3,
        "weight_decay": 5e-5,
        "batch_size": 16,
        "max_epochs": 40,
        "lambda_c": 1.0,
        "lambda_s": 4.5,
        "patience": 2,
        "lr_factor": 0.5,
        "max_lr_reductions": 2,
    },
    "decode": {
        "decoder": "best_path",
        "beam_width": 10,
    },
}


def load_schema() -> dict:
    text = resources.files("phosc").joinpath("data/config_schema.json").read_text("utf-8")
    return json.loads(text)


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def validate_config(config: dict) -> None:
    try:
        jsonschema.validate(config, load_schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {e.message}") from None


def default_config() -> dict:
    return json.loads(json.dumps(DEFAULTS))


def load_config(path: str | Path | None = None) -> dict:
    """Parse, validate and merge a config file over the defaults. With no
    path, returns the defaults."""
    if path is None:
        return default_config()
    path = Path(path)
    try:
        raw = json.loads(path.read_text("utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    validate_config(raw)
    merged = _deep_merge(default_config(), raw)
    validate_config(merged)
    return merged


def resolve_seed(config: dict, cli_seed: int | None = None) -> int:
    """Apply the seed precedence chain; validates PHOSC_SEED if set."""
    if cli_seed is not None:
        return int(cli_seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
        if value < 0:
            raise ConfigError(f"{SEED_ENV_VAR} must be >= 0, got {value}")
        return value
    return int(config.get("seed", 0))
