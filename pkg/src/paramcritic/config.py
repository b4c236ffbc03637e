"""Experiment configuration: flat YAML files, ``key=value`` overrides, strict keys."""

from __future__ import annotations

import re
from pathlib import Path

import yaml

from .trainer import TrainConfig

TOY_DEFAULTS = {
    "iterations": 10_000,
    "eta": 0.1,
    "mu": 0.005,
    "alpha": 0.005,
    "critic_steps": 1,
    "batch_size": 1,
    "buffer_capacity": None,
    "direction": "descend",
    "theta0": [1.0],
    "critic_hidden": [256],
    "critic_activation": "sigmoid2",
    "critic_bias_init": "uniform",
    "seed": 0,
    "mse_interval": 100,
    "noise_levels": [0.01, 0.1, 1.0],
    "modes": ["baseline", "critic"],
    "trials": 50,
    "out": "runs/toy",
    "checkpoint_interval": 0,
    "flush_interval": 1000,
}

CARTPOLE_DEFAULTS = {
    "iterations": 120_000,
    "eta": 5e-5,
    "mu": 0.5,
    # with plain SGD on the mean squared error, alpha = 1e-8 and one step per
    # iteration leave the critic, and hence the actor, essentially frozen
    "alpha": 1e-5,
    "critic_steps": 20,
    "batch_size": 20,
    "buffer_capacity": 50,
    "direction": "ascend",
    "sampler_mode": "finite",
    "horizon": 200,
    "gamma": 0.99,
    "actor_activation": "relu",
    "critic_hidden": [256, 128],
    "critic_activation": "relu",
    "critic_bias_init": "uniform",
    "seed": 0,
    "eval_interval": 1000,
    "eval_episodes": 20,
    "mse_interval": 1,
    "architectures": [[34, 22]],
    "modes": ["critic"],
    "trials": 1,
    "out": "runs/cartpole",
    "checkpoint_interval": 10_000,
    "flush_interval": 1000,
}

DEFAULTS = {"toy": TOY_DEFAULTS, "cartpole": CARTPOLE_DEFAULTS}
MODES = ("baseline", "critic")


class ConfigError(ValueError):
    """Unparsable or invalid experiment configuration."""


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 reads "1e-8" as a string; accept exponent floats without a dot
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                   |\.[0-9_]+(?:[eE][-+][0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _yaml(text: str):
    return yaml.load(text, Loader=_Loader)


def _coerce(key: str, value, annotation: str):
    if value is None and "None" in annotation:
        return None
    base = annotation.split("|")[0].strip()
    if base == "float" and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if base == "int" and isinstance(value, (int, float)) and not isinstance(value, bool) and float(value).is_integer():
        return int(value)
    if base == "bool" and isinstance(value, bool):
        return value
    if base == "str" and isinstance(value, str):
        return value
    if base.startswith("tuple") and isinstance(value, (list, tuple)):
        return tuple(value)
    raise ConfigError(f"invalid value for {key!r}: {value!r}")


def parse_override(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override must look like key=value, got {text!r}")
    try:
        return key.strip(), _yaml(value)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value of {key!r}: {exc}") from None


def load_config(kind: str, path=None, overrides=(), **flags) -> dict:
    """Defaults for ``kind``, then the file, then ``key=value`` overrides, then non-None flags."""
    cfg = dict(DEFAULTS[kind])
    layers = []
    if path is not None:
        try:
            data = _yaml(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if data is None:
            data = {}
        if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
            raise ConfigError(f"config {path} must be a flat key: value mapping")
        layers.append(data)
    layers.append(dict(parse_override(o) for o in overrides))
    layers.append({k: v for k, v in flags.items() if v is not None})
    for layer in layers:
        for key, value in layer.items():
            if key not in cfg:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = value
    validate(kind, cfg)
    return cfg


def validate(kind: str, cfg: dict) -> None:
    if not isinstance(cfg["trials"], int) or cfg["trials"] < 1:
        raise ConfigError("trials must be a positive integer")
    modes = cfg["modes"]
    if not isinstance(modes, list) or not modes or any(m not in MODES for m in modes):
        raise ConfigError(f"modes must be a non-empty list drawn from {MODES}")
    if kind == "toy":
        levels = cfg["noise_levels"]
        if not isinstance(levels, list) or not levels or any(not isinstance(s, (int, float)) or s < 0 for s in levels):
            raise ConfigError("noise_levels must be a non-empty list of non-negative numbers")
    else:
        archs = cfg["architectures"]
        if (not isinstance(archs, list) or not archs
                or any(not isinstance(a, list) or not all(isinstance(n, int) and n > 0 for n in a) for a in archs)):
            raise ConfigError("architectures must be a list of hidden-size lists, e.g. [[34, 22]]")
    for key in ("checkpoint_interval", "flush_interval"):
        if not isinstance(cfg[key], int) or cfg[key] < 0:
            raise ConfigError(f"{key} must be a non-negative integer")
    # surface TrainConfig validation as a config error
    train_config(kind, cfg)


def train_config(kind: str, cfg: dict, **run) -> TrainConfig:
    """TrainConfig for one run; ``run`` supplies per-run values such as trial or noise_sigma."""
    fields = TrainConfig.__dataclass_fields__
    values = {k: _coerce(k, v, str(fields[k].type)) for k, v in cfg.items() if k in fields}
    values["problem"] = kind
    if kind == "toy":
        values.setdefault("noise_sigma", float(cfg["noise_levels"][0]))
        values["sampler_mode"] = "synthetic"
    else:
        values.setdefault("actor_hidden", tuple(cfg["architectures"][0]))
    values.update(run)
    try:
        return TrainConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def dump_config(cfg: dict, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg, sort_keys=True, default_flow_style=None))
