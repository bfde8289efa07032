"""Experiment configs: one YAML mapping per experiment.

    ensemble: {kind: grandfather}
    operation: {name: speed, n: 200, samples: 10000}
    seed: 1
    workers: 1
    out: results.jsonl
"""
import os
from dataclasses import dataclass, field

import yaml

from .generators import ENSEMBLE_KINDS

OPERATIONS = (
    "generate", "walk", "entropy", "speed", "range", "growth", "inequality", "stationarity",
    "reversibility", "mtp", "cocycle", "percolation",
)
SEED_ENV = "ERGOLAB_SEED"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    ensemble: dict
    operation: dict
    seed: int = 0
    workers: int = 1
    out: str = None
    extra: dict = field(default_factory=dict)

    @property
    def op(self):
        return self.operation["name"]

    def op_params(self):
        return {k: v for k, v in self.operation.items() if k != "name"}

    def ensemble_params(self):
        return {k: v for k, v in self.ensemble.items() if k != "kind"}

    def to_dict(self):
        return {"ensemble": dict(self.ensemble), "operation": dict(self.operation), "seed": self.seed,
                "workers": self.workers}


def _seed(value):
    try:
        s = int(value, 0) if isinstance(value, str) else int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {value!r}") from None
    if not 0 <= s < 2**64:
        raise ConfigError("seed must fit in 64 bits")
    return s


def validate(raw):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - {"ensemble", "operation", "seed", "workers", "out"}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    ens = raw.get("ensemble", {})
    op = raw.get("operation")
    if isinstance(ens, str):
        ens = {"kind": ens}
    if isinstance(op, str):
        op = {"name": op}
    if not isinstance(ens, dict) or ens.get("kind") not in ENSEMBLE_KINDS:
        raise ConfigError(f"ensemble.kind must be one of {ENSEMBLE_KINDS}")
    if not isinstance(op, dict) or op.get("name") not in OPERATIONS:
        raise ConfigError(f"operation.name must be one of {OPERATIONS}")
    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers must be a positive integer")
    return ExperimentConfig(dict(ens), dict(op), _seed(raw.get("seed", 0)), workers, raw.get("out"))


def load_config(path=None, overrides=None, env=None):
    """Read a YAML config; ``ERGOLAB_SEED`` then explicit overrides win."""
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(str(exc)) from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad YAML: {exc}") from None
    raw = dict(raw)
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        raw["seed"] = env[SEED_ENV]
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k in ("ensemble", "operation") and isinstance(v, dict):
            base = raw.get(k) or {}
            base = {"kind": base} if k == "ensemble" and isinstance(base, str) else dict(base)
            base.update(v)
            raw[k] = base
        else:
            raw[k] = v
    return validate(raw)
