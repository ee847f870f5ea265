"""Experiment configuration: YAML in, validated dataclasses out.

One file describes a whole batch: which level, which evaluators, how many
seeds and generations, and the knobs for search, learner, reward, and
planner.  `MECHANIC_FORGE_SEED` in the environment replaces the seed list,
which keeps cluster sweeps one-variable.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .learner import LearnerConfig, RewardConfig
from .level import LevelSpec, load_default_level, load_level
from .planner import DEFAULT_NODE_BUDGET
from .search import SearchConfig

SEED_ENV_VAR = "MECHANIC_FORGE_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    level: str = "default"
    evaluators: tuple[str, ...] = ("astar", "rl")
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "runs"
    balance_weight: float = 10.0
    lower_is_better: bool = True
    max_generations: int = 1
    astar_budget: int = DEFAULT_NODE_BUDGET
    search: SearchConfig = field(default_factory=SearchConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        for kind in self.evaluators:
            if kind not in ("astar", "rl"):
                raise ConfigError(f"unknown evaluator {kind!r}")
        if not self.evaluators:
            raise ConfigError("at least one evaluator required")
        if self.max_generations <= 0 or self.astar_budget <= 0:
            raise ConfigError("max_generations and astar_budget must be positive")

    def load_level_spec(self) -> LevelSpec:
        if self.level == "default":
            return load_default_level()
        return load_level(self.level)


_SECTION_TYPES = {"search": SearchConfig, "learner": LearnerConfig,
                  "reward": RewardConfig}


def _build_section(cls, mapping, label):
    if not isinstance(mapping, dict):
        raise ConfigError(f"section {label!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    extra = set(mapping) - known
    if extra:
        raise ConfigError(f"unknown keys in {label!r}: {sorted(extra)}")
    try:
        return cls(**mapping)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {label!r} section: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    kwargs = dict(data)
    for name, cls in _SECTION_TYPES.items():
        if name in kwargs:
            kwargs[name] = _build_section(cls, kwargs[name], name)
    for name in ("evaluators", "seeds"):
        if name in kwargs:
            if not isinstance(kwargs[name], list):
                raise ConfigError(f"{name} must be a list")
            kwargs[name] = tuple(kwargs[name])
    try:
        cfg = ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out: dict = {}
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if f.name in _SECTION_TYPES:
            out[f.name] = dataclasses.asdict(value)
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


def load_config(path: str | Path) -> ExperimentConfig:
    """Read, validate, and apply the environment seed override."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    cfg = config_from_dict(data)
    if cfg.level != "default" and not Path(cfg.level).is_file():
        raise ConfigError(f"level file not found: {cfg.level}")
    override = os.environ.get(SEED_ENV_VAR)
    if override is not None:
        try:
            cfg = dataclasses.replace(cfg, seeds=(int(override),))
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from exc
    return cfg


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=True))
