"""Flat ``key = value`` run configuration.

Grammar: one ``key = value`` per line, ``#`` starts a comment, blank lines
are ignored, every value is a decimal number. Recognised keys:

    lambda, m2, a, theta     model parameters
    M, i_max                 slicing ratio and highest slice index
    grid_min, grid_max, grid_count   log-spaced cutoff grid

Unknown or repeated keys are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DomainError
from .model import ModelParams, SliceFamily
from .rg_flow import CutoffGrid

DEFAULTS = {
    "lambda": 0.1,
    "m2": 1.0,
    "a": 0.1,
    "theta": 1.0,
    "M": 2.0,
    "i_max": 12,
    "grid_min": 100.0,
    "grid_max": 10000.0,
    "grid_count": 9,
}
INTEGER_KEYS = {"i_max", "grid_count"}


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.key = key
        self.line = line


def _number(key, text, line=None):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"value for key '{key}' is not a decimal number: {text!r}", key, line) from None
    if not math.isfinite(value):
        raise ConfigError(f"value for key '{key}' must be finite", key, line)
    if key in INTEGER_KEYS:
        if value != int(value):
            raise ConfigError(f"value for key '{key}' must be an integer, got {text}", key, line)
        return int(value)
    return value


def parse_config(text: str) -> dict:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", None, lineno)
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key '{key}'", key, lineno)
        if key in values:
            raise ConfigError(f"repeated config key '{key}'", key, lineno)
        values[key] = _number(key, value, lineno)
    return values


@dataclass
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    grid_min: float = DEFAULTS["grid_min"]
    grid_max: float = DEFAULTS["grid_max"]
    grid_count: int = DEFAULTS["grid_count"]
    M: float = DEFAULTS["M"]
    i_max: int = DEFAULTS["i_max"]
    output_dir: Path | None = None
    format: str = "csv"

    @classmethod
    def from_mapping(cls, values: dict, **extra) -> "RunConfig":
        merged = dict(DEFAULTS)
        merged.update(values)
        try:
            params = ModelParams(lam=merged["lambda"], m2=merged["m2"], a=merged["a"], theta=merged["theta"])
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        cfg = cls(params=params, grid_min=merged["grid_min"], grid_max=merged["grid_max"],
                  grid_count=merged["grid_count"], M=merged["M"], i_max=merged["i_max"], **extra)
        cfg.slices()
        return cfg

    @classmethod
    def load(cls, path, **extra) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_mapping(parse_config(text), **extra)

    def grid(self) -> CutoffGrid:
        grid = CutoffGrid.logspace(self.grid_min, self.grid_max, self.grid_count)
        grid.check(self.params)
        return grid

    def slices(self) -> SliceFamily:
        try:
            return SliceFamily(self.M, self.i_max)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
