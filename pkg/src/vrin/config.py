"""Training configuration, task presets, and the flat key=value file format."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Invalid or unknown configuration keys/values."""


@dataclass
class TrainConfig:
    """All knobs for one training run.

    Defaults follow the classification regime (learning rate 0.005,
    dropout 0.1); ``imputation_preset`` switches to the imputation regime
    (learning rate 0.0005, dropout 0.3). Loss weights alpha/beta must lie
    in [0.1, 1.0].
    """

    alpha: float = 1.0
    beta: float = 0.75
    xi: float = 0.1
    l1_weight: float = 1e-5
    learning_rate: float = 0.005
    weight_decay: float = 1e-5
    epochs: int = 100
    batch_size: int = 64
    hidden_size: int = 64
    latent_dim: int = 10
    encoder_sizes: tuple = (64, 24)
    dropout_rate: float = 0.1
    direction: str = "uni"
    variant: str = "v_rin_full"
    seed: int = 0
    n_steps: int = 48
    n_features: int = 35
    window_hours: float = 1.0
    precision: str = "float64"
    likelihood_observed_only: bool = True
    batch_norm: bool = False  # reserved; the variational layers run without it

    @property
    def dtype(self):
        return np.float64 if self.precision == "float64" else np.float32

    def validate(self) -> None:
        problems = []
        if not 0.1 <= self.alpha <= 1.0:
            problems.append(f"alpha must be in [0.1, 1.0], got {self.alpha}")
        if not 0.1 <= self.beta <= 1.0:
            problems.append(f"beta must be in [0.1, 1.0], got {self.beta}")
        if self.xi < 0:
            problems.append(f"xi must be >= 0, got {self.xi}")
        if self.l1_weight < 0:
            problems.append(f"l1_weight must be >= 0, got {self.l1_weight}")
        if self.learning_rate <= 0:
            problems.append(f"learning_rate must be positive, got {self.learning_rate}")
        if self.weight_decay < 0:
            problems.append(f"weight_decay must be >= 0, got {self.weight_decay}")
        for name in ("epochs", "batch_size", "hidden_size", "latent_dim",
                     "n_steps", "n_features"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.encoder_sizes or any(s < 1 for s in self.encoder_sizes):
            problems.append(f"encoder_sizes must be positive, got {self.encoder_sizes}")
        if not 0.0 <= self.dropout_rate < 1.0:
            problems.append(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.direction not in ("uni", "bi"):
            problems.append(f"direction must be 'uni' or 'bi', got '{self.direction}'")
        if self.variant not in ("v_rin", "v_rin_full"):
            problems.append(f"variant must be 'v_rin' or 'v_rin_full', got '{self.variant}'")
        if self.window_hours <= 0:
            problems.append(f"window_hours must be positive, got {self.window_hours}")
        if self.precision not in ("float64", "float32"):
            problems.append(f"precision must be 'float64' or 'float32', got '{self.precision}'")
        if self.batch_norm:
            problems.append("batch_norm is reserved and must stay false")
        if problems:
            raise ConfigError("; ".join(problems))

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["encoder_sizes"] = list(self.encoder_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(d)
        if "encoder_sizes" in kwargs:
            kwargs["encoder_sizes"] = tuple(int(v) for v in kwargs["encoder_sizes"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


def classification_preset(**overrides) -> TrainConfig:
    cfg = replace(TrainConfig(), learning_rate=0.005, dropout_rate=0.1, **overrides)
    cfg.validate()
    return cfg


def imputation_preset(**overrides) -> TrainConfig:
    cfg = replace(TrainConfig(), learning_rate=0.0005, dropout_rate=0.3, **overrides)
    cfg.validate()
    return cfg


_FIELD_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "encoder_sizes":
        return tuple(int(p) for p in raw.split(",") if p.strip())
    if key in ("likelihood_observed_only", "batch_norm"):
        low = raw.lower()
        if low not in ("true", "false"):
            raise ConfigError(f"key '{key}' expects true/false, got '{raw}'")
        return low == "true"
    if key in ("direction", "variant", "precision"):
        return raw
    if key in ("epochs", "batch_size", "hidden_size", "latent_dim", "seed",
               "n_steps", "n_features"):
        return int(raw)
    return float(raw)


def read_config_values(path) -> dict:
    """Parse a flat ``key = value`` file into typed values; unknown keys fail."""
    text = Path(path).read_text(encoding="utf-8")
    values: dict = {}
    unknown = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{stripped}'")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            unknown.append(key)
            continue
        try:
            values[key] = _parse_value(key, raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for '{key}': {exc}") from None
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return values


def parse_config_file(path, base: TrainConfig | None = None) -> TrainConfig:
    """Apply a flat config file over a base config and validate the result."""
    base = base if base is not None else TrainConfig()
    cfg = replace(base, **read_config_values(path))
    cfg.validate()
    return cfg


def config_to_text(cfg: TrainConfig) -> str:
    lines = []
    for f in fields(TrainConfig):
        value = getattr(cfg, f.name)
        if f.name == "encoder_sizes":
            value = ",".join(str(int(v)) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
