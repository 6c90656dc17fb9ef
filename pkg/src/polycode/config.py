"""Run configuration: nested dataclasses loaded from YAML with dotted CLI overrides."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import yaml

from .exceptions import ConfigError

TASKS = ("summarization", "completion")
VARIANTS = ("vanilla", "abs_pos", "rel_pos", "path")
SCHEMES = ("none", "alpha", "beta", "gamma")


@dataclass
class ModelConfig:
    variant: str = "path"
    d: int = 64
    heads: int = 2
    layers: int = 2
    ffn_dim: int = 256
    dropout: float = 0.2
    word_dim: int = 64
    node_dim: int = 64
    path_hidden: int = 64
    share_path_encoder: bool = True
    decoder_layers: int = 2
    pointer: bool = True
    max_positions: int = 512
    max_rel_offset: int = 32
    max_decode_len: int = 8


@dataclass
class MetaConfig:
    scheme: str = "none"
    d_T: int = 64
    d_P: int = 64


@dataclass
class OptimConfig:
    name: str = "adam"
    lr: float = 1e-4
    grad_clip: Optional[float] = 1.0


@dataclass
class TrainConfig:
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    deterministic: bool = True
    per_language_batches: bool = False
    eval_every: int = 1


@dataclass
class DataConfig:
    dataset: Optional[str] = None
    train_split: str = "train"
    valid_split: str = "valid"
    min_count: int = 100
    max_len: int = 512
    max_path_len: int = 32


@dataclass
class RunConfig:
    task: str = "completion"
    model: ModelConfig = field(default_factory=ModelConfig)
    meta: MetaConfig = field(default_factory=MetaConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)

    def validate(self) -> "RunConfig":
        m = self.model
        problems = []
        if self.task not in TASKS:
            problems.append(f"task must be one of {TASKS}, got {self.task!r}")
        if m.variant not in VARIANTS:
            problems.append(f"model.variant must be one of {VARIANTS}, got {m.variant!r}")
        if self.meta.scheme not in SCHEMES:
            problems.append(f"meta.scheme must be one of {SCHEMES}, got {self.meta.scheme!r}")
        elif self.meta.scheme != "none" and m.variant != "path":
            problems.append("meta schemes require model.variant = 'path'")
        for name in ("d", "heads", "ffn_dim", "word_dim", "node_dim", "path_hidden"):
            if getattr(m, name) < 1:
                problems.append(f"model.{name} must be positive")
        if m.layers < 0 or m.decoder_layers < 0:
            problems.append("layer counts must be non-negative")
        if m.heads >= 1 and m.d % m.heads:
            problems.append(f"model.heads={m.heads} does not divide model.d={m.d}")
        if not 0.0 <= m.dropout < 1.0:
            problems.append("model.dropout must lie in [0, 1)")
        if self.meta.d_T < 1 or self.meta.d_P < 1:
            problems.append("meta.d_T and meta.d_P must be positive")
        if self.optim.name.lower() != "adam":
            problems.append(f"only the adam optimizer is supported, got {self.optim.name!r}")
        if self.optim.lr < 0:
            problems.append("optim.lr must be non-negative")
        if self.train.batch_size < 1 or self.train.epochs < 0:
            problems.append("train.batch_size must be >= 1 and train.epochs >= 0")
        if self.data.max_len < 1 or self.data.max_path_len < 1 or self.data.min_count < 1:
            problems.append("data caps and min_count must be positive")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        kwargs = {}
        for key, value in (data or {}).items():
            if key == "task":
                kwargs[key] = value
            elif key in _SECTIONS:
                kwargs[key] = _section(_SECTIONS[key], value, key)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return cls(**kwargs)

    def with_overrides(self, overrides: Iterable[str]) -> "RunConfig":
        data = self.to_dict()
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, raw = item.split("=", 1)
            node = data
            parts = key.strip().split(".")
            for part in parts[:-1]:
                if part not in node or not isinstance(node[part], dict):
                    raise ConfigError(f"unknown config key {key!r}")
                node = node[part]
            if parts[-1] not in node:
                raise ConfigError(f"unknown config key {key!r}")
            node[parts[-1]] = yaml.safe_load(raw)
        return RunConfig.from_dict(data)


_SECTIONS = {"model": ModelConfig, "meta": MetaConfig, "optim": OptimConfig, "train": TrainConfig,
             "data": DataConfig}


def _section(factory, value, name):
    if value is None:
        return factory()
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    known = {f.name for f in fields(factory)}
    unknown = set(value) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return factory(**value)


PRESETS = ("paper-summarization", "paper-completion", "desk-summarization", "desk-completion")


def preset_path(name: str) -> Path:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    return Path(str(resources.files("polycode") / "configs" / f"{name}.yaml"))


def load_config(source=None, overrides: Iterable[str] = ()) -> RunConfig:
    """Load a YAML config file or named preset and apply ``key=value`` overrides.

    The result is not validated; call :meth:`RunConfig.validate` before use.
    """
    if source is None:
        data = {}
    else:
        path = preset_path(source) if str(source) in PRESETS else Path(source)
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return RunConfig.from_dict(data).with_overrides(overrides)


def dump_config(config: RunConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False))
