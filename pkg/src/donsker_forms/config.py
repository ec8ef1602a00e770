"""Flat ``key = value`` experiment configuration."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError
from .structures import ErrorStructure1D, custom_structure, get_structure

EXPERIMENTS = (
    "prop1",
    "thm1",
    "thm2",
    "application",
    "prop2",
    "prop3",
    "thm3",
    "diagnostics",
    "selftest",
)


@dataclass
class ExperimentConfig:
    experiment: str = "selftest"
    structure: str = "ou_gauss"
    kappa: float = 0.5
    n_list: tuple = (100, 1000)
    samples: int = 10_000
    m: int = 2000
    seed: int = 12345
    workers: int = 1
    out: Optional[str] = None
    format: str = "csv"
    functional: str = "sin1"
    prop2_f: str = "a+b"
    alphas: tuple = (8.0, 16.0, 32.0)
    fixtures: Optional[str] = None
    custom_sampler: Optional[str] = None
    custom_gamma: Optional[str] = None
    custom_sigma2: float = 1.0
    custom_c: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}"
            )
        if self.samples < 2 or self.m < 1 or self.workers < 1:
            raise ConfigurationError("samples >= 2, m >= 1 and workers >= 1 required")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ConfigurationError("n_list must contain positive sizes")
        if self.format not in ("csv", "json"):
            raise ConfigurationError(f"format must be csv or json, got {self.format!r}")

    def error_structure(self) -> ErrorStructure1D:
        if self.structure == "custom":
            if not (self.custom_sampler and self.custom_gamma):
                raise ConfigurationError("custom structure needs custom_sampler and custom_gamma")
            return custom_structure(
                "custom", self.custom_sampler, self.custom_gamma,
                self.custom_sigma2, self.custom_c,
            )
        if self.structure == "weighted_uniform":
            return get_structure("weighted_uniform", kappa=self.kappa)
        return get_structure(self.structure)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name, raw):
    default = _FIELDS[name].default
    if name == "n_list":
        return tuple(int(float(x)) for x in str(raw).replace(",", " ").split())
    if name == "alphas":
        return tuple(float(x) for x in str(raw).replace(",", " ").split())
    if isinstance(default, bool):
        return str(raw).lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(float(raw))
    if isinstance(default, float):
        return float(raw)
    return None if raw in ("", "none", "None") else str(raw)


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        values[key.strip()] = value.strip()
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge file values and CLI overrides (overrides win) into a config."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    kwargs = {}
    for key, raw in merged.items():
        if key not in _FIELDS:
            raise ConfigurationError(f"unknown config key {key!r}")
        try:
            kwargs[key] = _coerce(key, raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc
    return ExperimentConfig(**kwargs)


def load_config(path, overrides=None) -> ExperimentConfig:
    return build_config(parse_config_text(Path(path).read_text()), overrides)
