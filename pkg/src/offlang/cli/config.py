"""Experiment configuration: strict JSON with unknown-key rejection."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class SchemaConfig:
    id: str | int = "id"
    text: str | int = "text"
    label: str | int | None = "label"
    header: bool = True


@dataclass
class DataConfig:
    train: str = ""
    validation: str | None = None
    test: str | None = None
    source: str | None = None
    validation_fraction: float = 0.1
    split_seed: int = 0
    schema: SchemaConfig = field(default_factory=SchemaConfig)


@dataclass
class ClassicalConfig:
    lowercase: bool = True
    min_frequency: int = 1
    smoothing: float = 1.0
    alpha: float = 0.001
    svm_seed: int = 5
    svm_epochs: int = 15
    n_trees: int = 500


@dataclass
class EncoderSection:
    d_model: int = 64
    heads: int = 4
    layers: int = 2
    ff_dim: int = 128
    max_len: int = 64
    dropout: float = 0.1
    bpe_merges: int = 1000


@dataclass
class HyperSection:
    learning_rate: float = 1e-5
    epochs: int = 3
    batch_size: int = 16


@dataclass
class ExperimentConfig:
    model: str = "rf"  # mnb | svm | rf | encoder
    data: DataConfig = field(default_factory=DataConfig)
    preprocess: str | None = None  # classical | transformer; defaults by model kind
    classical: ClassicalConfig = field(default_factory=ClassicalConfig)
    encoder: EncoderSection = field(default_factory=EncoderSection)
    train: HyperSection = field(default_factory=HyperSection)
    mlm: HyperSection | None = None
    source_train: HyperSection | None = None
    recipe: str = "base"
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    lm_include_source: bool = False
    output_dir: str = "run"

    @property
    def regime(self) -> str:
        if self.preprocess:
            return self.preprocess
        return "transformer" if self.model == "encoder" else "classical"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}")
    kwargs = {}
    for key, value in data.items():
        kwargs[key] = _coerce(hints[key], value, f"{where}.{key}")
    return cls(**kwargs)


def _coerce(tp, value, where):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, where)
    if origin in (typing.Union, types.UnionType):
        if value is None:
            if type(None) in args:
                return None
            raise ConfigError(f"{where}: may not be null")
        errors = []
        for arg in args:
            if arg is type(None):
                continue
            try:
                return _coerce(arg, value, where)
            except ConfigError as exc:
                errors.append(str(exc))
        raise ConfigError(errors[0] if len(errors) == 1 else f"{where}: invalid value {value!r}")
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return [_coerce(args[0], v, f"{where}[{i}]") for i, v in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    raise ConfigError(f"{where}: unsupported type {tp}")


MODELS = ("mnb", "svm", "rf", "encoder")


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    from ..strategies.recipe import Recipe, RecipeError

    if cfg.model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {cfg.model!r}")
    if cfg.regime not in ("classical", "transformer"):
        raise ConfigError(f"preprocess must be classical or transformer, got {cfg.preprocess!r}")
    if not cfg.data.train:
        raise ConfigError("data.train is required")
    if not 0.0 < cfg.data.validation_fraction < 1.0:
        raise ConfigError("data.validation_fraction must be in (0, 1)")
    if not cfg.seeds:
        raise ConfigError("seeds must not be empty")
    try:
        recipe = Recipe.parse(cfg.recipe)
    except RecipeError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.model != "encoder" and str(recipe) != "base":
        raise ConfigError(f"recipe {cfg.recipe!r} only applies to the encoder model")
    if recipe.transfer and not cfg.data.source:
        raise ConfigError("recipe with TL needs data.source")
    if cfg.encoder.d_model % cfg.encoder.heads:
        raise ConfigError("encoder.d_model must be divisible by encoder.heads")
    for name in ("train", "mlm", "source_train"):
        h = getattr(cfg, name)
        if h is not None and (h.learning_rate <= 0 or h.epochs < 1 or h.batch_size < 1):
            raise ConfigError(f"{name}: learning_rate > 0, epochs >= 1, batch_size >= 1 required")
    return cfg


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON config. Relative data paths are resolved
    against the config file's directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    cfg = validate(_build(ExperimentConfig, raw, "config"))
    base = path.resolve().parent
    for key in ("train", "validation", "test", "source"):
        value = getattr(cfg.data, key)
        if value and not Path(value).is_absolute():
            setattr(cfg.data, key, str(base / value))
    return cfg


def config_from_dict(raw: dict) -> ExperimentConfig:
    return validate(_build(ExperimentConfig, raw, "config"))
