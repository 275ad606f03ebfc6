"""Experiment configuration: TOML file or plain mapping, strictly validated.

Unknown keys anywhere in the tree are errors, so a typo like `epochss` fails
immediately instead of silently running with a default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..errors import ConfigError
from ..integration import STRATEGIES


def _check_keys(section: str, mapping: dict, allowed) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")


@dataclass(frozen=True)
class DataConfig:
    source: str = "mixture"
    n_classes: int = 4
    feature_dim: int = 8
    separation: float = 2.5
    spread: float = 1.0
    per_class_train: int = 500
    per_class_test: int = 125
    path: str = ""
    test_path: str = ""
    hash_dim: int = 4096

    def __post_init__(self):
        if self.source not in ("mixture", "jsonl", "text_jsonl"):
            raise ConfigError(f"unknown data source {self.source!r}")
        if self.source == "mixture":
            if self.n_classes < 4 or self.feature_dim < self.n_classes:
                raise ConfigError("mixture needs n_classes >= 4 and feature_dim >= n_classes")
            if self.spread < 0 or self.separation <= 0:
                raise ConfigError("separation must be > 0 and spread >= 0")
            if min(self.per_class_train, self.per_class_test) <= 0:
                raise ConfigError("per-class counts must be positive")
        elif not self.path or not self.test_path:
            raise ConfigError(f"source {self.source!r} needs path and test_path")


@dataclass(frozen=True)
class ModelConfig:
    hidden_dims: tuple[int, ...] = (64,)
    dropout_rate: float = 0.1
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if not self.hidden_dims or min(self.hidden_dims) <= 0:
            raise ConfigError("hidden_dims must list positive sizes")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must be in [0, 1)")
        if min(self.epochs, self.batch_size) <= 0 or self.learning_rate <= 0:
            raise ConfigError("epochs, batch_size, learning_rate must be positive")


@dataclass(frozen=True)
class StudentSection(ModelConfig):
    epochs: int = 3
    eval_every: int = 100
    val_fraction: float = 0.05

    def __post_init__(self):
        super().__post_init__()
        if self.eval_every <= 0:
            raise ConfigError("eval_every must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must be in (0, 1)")


@dataclass(frozen=True)
class DiagnosticsSection:
    enabled: bool = True
    ece_bins: int = 10

    def __post_init__(self):
        if self.ece_bins < 1:
            raise ConfigError("ece_bins must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 1
    seeds: tuple[int, ...] = (1, 2, 3)
    teacher_count: int = 2
    strategies: tuple[str, ...] = ("hard", "soft", "vanilla_kd", "uhc", "supervised")
    k: int = 16
    tau: float = 0.2
    partition: tuple[tuple[int, ...], ...] | None = None
    data: DataConfig = field(default_factory=DataConfig)
    teacher: ModelConfig = field(default_factory=ModelConfig)
    student: StudentSection = field(default_factory=StudentSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if self.teacher_count < 2:
            raise ConfigError("teacher_count must be >= 2")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.tau <= 0:
            raise ConfigError("tau must be > 0")
        if not self.strategies:
            raise ConfigError("need at least one strategy")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.partition is not None:
            object.__setattr__(
                self, "partition",
                tuple(tuple(int(g) for g in sub) for sub in self.partition))


def _build(cls, section: str, mapping: dict):
    fields = {f.name for f in dataclasses.fields(cls)}
    _check_keys(section, mapping, fields)
    return cls(**mapping)


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    nested = {
        "data": (DataConfig, raw.pop("data", {})),
        "teacher": (ModelConfig, raw.pop("teacher", {})),
        "student": (StudentSection, raw.pop("student", {})),
        "diagnostics": (DiagnosticsSection, raw.pop("diagnostics", {})),
    }
    top_fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    _check_keys("experiment", raw, top_fields - set(nested))
    kwargs = dict(raw)
    for name, (cls, section) in nested.items():
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a table")
        kwargs[name] = _build(cls, name, section)
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw)


def config_to_dict(config: ExperimentConfig) -> dict:
    """Plain-JSON view of a config, e.g. for echoing into run artifacts."""
    out = dataclasses.asdict(config)
    for key, value in list(out.items()):
        if isinstance(value, tuple):
            out[key] = list(value)
    for section in ("data", "teacher", "student", "diagnostics"):
        for key, value in list(out[section].items()):
            if isinstance(value, tuple):
                out[section][key] = list(value)
    if out["partition"] is not None:
        out["partition"] = [list(s) for s in out["partition"]]
    return out
