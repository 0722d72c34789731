"""Layered run configuration: command-line flag > config file > default."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from ._toml import load_toml
from .errors import ValidationError
from .evaluation import AGGREGATIONS

_INT_KEYS = ("num_samples", "repetition_threshold", "context_window", "seed")
_FLOAT_KEYS = ("nucleus_p",)
_BOOL_KEYS = ("include_self",)
_STR_KEYS = ("utility", "aggregation")
_KNOWN_KEYS = frozenset(_INT_KEYS + _FLOAT_KEYS + _BOOL_KEYS + _STR_KEYS)


@dataclass(frozen=True)
class RunConfig:
    """Experiment-level knobs shared by the command-line subcommands.

    context_window is a document of record for how candidate pools were
    produced upstream; it is echoed into report metadata and consumed by
    nothing else in this package.
    """

    num_samples: int = 50
    nucleus_p: float = 0.9
    repetition_threshold: int = 3
    context_window: int = 5
    include_self: bool = False
    utility: str = "bleu"
    aggregation: str = "pooled"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValidationError(f"num_samples must be >= 1, got {self.num_samples}")
        if not 0.0 < self.nucleus_p <= 1.0:
            raise ValidationError(f"nucleus_p must be in (0, 1], got {self.nucleus_p}")
        if self.repetition_threshold < 1:
            raise ValidationError(f"repetition_threshold must be >= 1, got {self.repetition_threshold}")
        if self.context_window < 0:
            raise ValidationError(f"context_window must be >= 0, got {self.context_window}")
        if not self.utility:
            raise ValidationError("utility name must be nonempty")
        if self.aggregation not in AGGREGATIONS:
            raise ValidationError(f"aggregation must be one of {AGGREGATIONS}, got {self.aggregation!r}")


def _typed(where: str, key: str, value: object) -> object:
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ValidationError(f"{where}: {key} must be a boolean, got {value!r}")
        return value
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"{where}: {key} must be an integer, got {value!r}")
        return value
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{where}: {key} must be a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ValidationError(f"{where}: {key} must be a string, got {value!r}")
    return value


def load_run_config(path: str | Path) -> RunConfig:
    """Read a RunConfig from a TOML file, rejecting unknown keys."""
    data = load_toml(path)
    unknown = sorted(set(data) - _KNOWN_KEYS)
    if unknown:
        raise ValidationError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return RunConfig(**{key: _typed(str(path), key, value) for key, value in data.items()})


def resolve_run_config(config_path: str | Path | None = None, **overrides: object) -> RunConfig:
    """Apply flag-level overrides on top of a config file on top of defaults.

    Overrides with value None mean "not supplied on the command line" and
    leave the file or default value in force.
    """
    unknown = sorted(set(overrides) - _KNOWN_KEYS)
    if unknown:
        raise ValidationError(f"unknown config overrides: {', '.join(unknown)}")
    base = load_run_config(config_path) if config_path is not None else RunConfig()
    supplied = {key: value for key, value in overrides.items() if value is not None}
    return replace(base, **supplied) if supplied else base
