"""Run configuration: flat ``key = value`` files plus command-line overrides."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields

from .errors import ConfigError

SEED_ENV = "SURVNET_SEED"


@dataclass
class RunConfig:
    # data source: simulate | csv | mnist
    source: str = "simulate"
    scheme: str = "indep_mean_shift"
    n: int = 10000
    p: int = 784
    p_prime: int = 64
    data_path: str = ""
    target: str = "y"
    has_header: bool = True
    mnist_dir: str = ""
    digits: str = "4,9"
    standardize: bool = True
    # selection
    eta_star: float = 0.1
    epsilon: float = 1.0
    q: int = 0  # 0 means q = p
    score_kind: str = "square_mean"
    scale_scores: bool = False
    # network and training; learning_rate 0 picks 0.05 / 0.01 by task
    hidden: str = "40,20"
    batch_size: int = 50
    learning_rate: float = 0.0
    max_epochs: int = 200
    patience: int = 5
    min_delta: float = 0.01
    # replication
    seed: int = 0
    replicates: int = 1
    workers: int = 1
    out: str = "runs"

    def __post_init__(self):
        if self.source not in ("simulate", "csv", "mnist"):
            raise ConfigError(f"source: unknown value {self.source!r}")
        if self.replicates < 1 or self.workers < 1:
            raise ConfigError("replicates and workers must be >= 1")
        self.hidden_layers()

    def hidden_layers(self):
        try:
            dims = tuple(int(h) for h in str(self.hidden).split(",") if h.strip())
        except ValueError:
            raise ConfigError(f"hidden: expected comma-separated integers, got {self.hidden!r}") from None
        if any(d < 1 for d in dims):
            raise ConfigError("hidden: layer sizes must be positive")
        return dims

    def digit_pair(self):
        a, b = (int(d) for d in self.digits.split(","))
        return a, b

    def to_dict(self):
        return asdict(self)


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def coerce(key, value):
    """Convert a string from a file or flag to the field's type."""
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = FIELD_TYPES[key]
    if not isinstance(value, str):
        return value
    try:
        if kind == "bool":
            low = value.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from None
    return value.strip()


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            values[key] = coerce(key, value)
    return values


def build_config(path=None, overrides=None, environ=None):
    """Defaults < file < environment seed < explicit overrides."""
    values = {}
    if path:
        values.update(read_config_file(path))
    env = os.environ if environ is None else environ
    if env.get(SEED_ENV):
        values["seed"] = coerce("seed", env[SEED_ENV])
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = coerce(key, value)
    return RunConfig(**values)
