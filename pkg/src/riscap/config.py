"""Flat ``key = value`` experiment configuration files.

One assignment per line, ``#`` starts a comment. Values are Python literals
(numbers, lists, quoted strings); bare words are read as strings. System keys
use the :class:`~riscap.channel_model.SystemConfig` field names and genetic
algorithm keys carry a ``ga_`` prefix, e.g.::

    n_tx = 2
    n_rx = 4
    m_h = 4
    snr_grid_db = [-10, 0, 10, 20, 30, 40]
    phase_mode = random
    ga_generations = 100
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field, fields, replace

from .channel_model import SystemConfig
from .errors import ConfigError
from .phase_optimizer import GaParams

__all__ = ["ExperimentConfig", "parse_config", "load_config", "dump_config"]

PHASE_MODES = ("random", "zero", "optimized")


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    snr_grid_db: tuple = tuple(range(-10, 41, 5))
    m_grid: tuple = (16, 32, 64, 128, 256)
    mc_trials: int = 10_000
    seed: int = 0
    phase_mode: str = "random"
    output_path: str = "-"
    ga: GaParams = field(default_factory=GaParams)
    rho_db: float = 10.0
    energy_db: float = 10.0
    optimize_rho_db: float = 10.0
    offset_trials: int = 100_000
    threads: int = 1

    def __post_init__(self):
        for name in ("snr_grid_db", "m_grid"):
            grid = tuple(getattr(self, name))
            if not grid:
                raise ConfigError(f"{name} must not be empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be sorted ascending without repeats")
            object.__setattr__(self, name, grid)
        if self.phase_mode not in PHASE_MODES:
            raise ConfigError(f"phase_mode must be one of {PHASE_MODES}, got {self.phase_mode!r}")
        if self.mc_trials < 1 or self.offset_trials < 2:
            raise ConfigError("trial counts must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")


_SYSTEM_KEYS = {f.name for f in fields(SystemConfig)}
_GA_KEYS = {"ga_" + f.name: f.name for f in fields(GaParams)}
_TOP_KEYS = {f.name for f in fields(ExperimentConfig)} - {"system", "ga"}


def _value(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; unknown keys and bad values raise ConfigError."""
    system, ga, top = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        value = _value(value.strip())
        if key in _SYSTEM_KEYS:
            system[key] = value
        elif key in _GA_KEYS:
            ga[_GA_KEYS[key]] = value
        elif key in _TOP_KEYS:
            top[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    try:
        return ExperimentConfig(system=SystemConfig(**system), ga=GaParams(**ga), **top)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as handle:
            return parse_config(handle.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def dump_config(cfg: ExperimentConfig) -> str:
    """Render a config back into the flat text format."""
    lines = [f"{k} = {v!r}" for k, v in cfg.system.to_dict().items()]
    for f in fields(GaParams):
        lines.append(f"ga_{f.name} = {getattr(cfg.ga, f.name)!r}")
    for name in sorted(_TOP_KEYS):
        value = getattr(cfg, name)
        lines.append(f"{name} = {list(value) if isinstance(value, tuple) else value!r}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: ExperimentConfig, seed=None, trials=None, out=None, threads=None):
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if trials is not None:
        changes["mc_trials"] = trials
    if out is not None:
        changes["output_path"] = out
    if threads is not None:
        changes["threads"] = threads
    try:
        return replace(cfg, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
