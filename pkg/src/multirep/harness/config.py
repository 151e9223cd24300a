"""
Run configuration.

A RunConfig is a nested JSON document: one section per layer plus
top-level run settings. Overrides use dotted keys, for example
``loss.temperature=0.05`` or ``episodes.k=5``.
"""

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Union

from multirep.autodiff.precision import PRECISIONS
from multirep.corpus import SyntheticSpec
from multirep.encoder import EncoderConfig
from multirep.episodes import EpisodeSpec
from multirep.exceptions import ConfigurationError
from multirep.objectives import LossConfig
from multirep.representation import RepSelector


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam settings."""
    kind: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.kind != "adam":
            raise ConfigurationError(f"unknown optimizer '{self.kind}'; only 'adam' is supported")
        if not self.lr > 0:
            raise ConfigurationError("learning rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigurationError("Adam betas must be in [0, 1)")
        if not self.eps > 0:
            raise ConfigurationError("Adam eps must be positive")


@dataclass(frozen=True)
class DataConfig:
    """
    Where the corpus comes from.

    Without a train path the synthetic corpus is generated from
    ``RunConfig.synthetic`` and ``corpus_seed``. ``val_relations``
    training relations are set aside for checkpoint selection.
    """
    train_path: Optional[str] = None
    eval_path: Optional[str] = None
    descriptions_path: Optional[str] = None
    max_len: int = 64
    min_freq: int = 1
    corpus_seed: int = 0
    val_relations: int = 5

    def __post_init__(self) -> None:
        if self.val_relations < 1:
            raise ConfigurationError("val_relations must be at least 1")
        if self.max_len < 8:
            raise ConfigurationError("max_len must be at least 8")
        if self.min_freq < 1:
            raise ConfigurationError("min_freq must be at least 1")
        if (self.train_path is None) != (self.eval_path is None):
            raise ConfigurationError("train_path and eval_path must be given together")

    @property
    def synthetic(self) -> bool:
        return self.train_path is None


def _default_synthetic() -> SyntheticSpec:
    # 13 train, 5 validation and 6 held-out relations once validation is carved.
    return SyntheticSpec(num_relations=24, train_relations=18)


SECTIONS = {
    "encoder": EncoderConfig,
    "loss": LossConfig,
    "episodes": EpisodeSpec,
    "optimizer": OptimizerConfig,
    "selector": RepSelector,
    "synthetic": SyntheticSpec,
    "data": DataConfig,
}


@dataclass(frozen=True)
class RunConfig:
    """
    Everything that determines a run.

    Attributes:
        encoder: Encoder shape.
        loss: Loss terms and scoring.
        episodes: Training episode shape; evaluation uses the same
            unless overridden.
        optimizer: Adam settings.
        selector: Representation components.
        synthetic: Synthetic corpus shape.
        data: Corpus location and encoding limits.
        iterations: Optimizer steps.
        episodes_per_step: Episodes whose losses are summed per step.
        eval_episodes: Episodes per evaluation cell and seed.
        eval_interval: Steps between validation runs (0 disables them).
        val_episodes: Episodes per validation run.
        log_interval: Steps between loss log lines.
        seeds: Seeds averaged over by experiments.
        seed: Seed of a single training run.
        precision: "single" or "double".
        workers: Threads for evaluation and episode pre-sampling.
        output_dir: Where checkpoints and results go.
    """
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    episodes: EpisodeSpec = field(default_factory=EpisodeSpec)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    selector: RepSelector = field(default_factory=RepSelector)
    synthetic: SyntheticSpec = field(default_factory=_default_synthetic)
    data: DataConfig = field(default_factory=DataConfig)
    iterations: int = 2000
    episodes_per_step: int = 2
    eval_episodes: int = 1000
    eval_interval: int = 0
    val_episodes: int = 200
    log_interval: int = 10
    seeds: tuple[int, ...] = (0, 1, 2)
    seed: int = 0
    precision: str = "single"
    workers: int = 1
    output_dir: str = "runs/default"

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigurationError("iterations must be at least 1")
        if self.episodes_per_step < 1:
            raise ConfigurationError("episodes_per_step must be at least 1")
        if self.eval_episodes < 1 or self.val_episodes < 1:
            raise ConfigurationError("evaluation episode counts must be at least 1")
        if self.eval_interval < 0 or self.log_interval < 1:
            raise ConfigurationError("eval_interval must be >= 0 and log_interval >= 1")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigurationError("seeds must not be empty")
        if self.precision not in PRECISIONS:
            raise ConfigurationError(f"unknown precision '{self.precision}'")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if self.data.max_len > self.encoder.max_positions:
            raise ConfigurationError(
                f"max_len {self.data.max_len} exceeds encoder max_positions {self.encoder.max_positions}"
            )
        # Episodes carry descriptions exactly when the loss uses them.
        if self.episodes.with_descriptions != self.loss.use_descriptions:
            object.__setattr__(
                self, "episodes", replace(self.episodes, with_descriptions=self.loss.use_descriptions)
            )

    # --- Variants ---

    def without_descriptions(self) -> "RunConfig":
        return replace(self, loss=self.loss.without_descriptions())

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=int(seed))

    def with_selector(self, selector: RepSelector) -> "RunConfig":
        return replace(self, selector=selector)

    def with_episodes(self, n: Optional[int] = None, k: Optional[int] = None, q: Optional[int] = None) -> "RunConfig":
        spec = self.episodes
        new_k = spec.k if k is None else k
        new_q = q if q is not None else (new_k if k is not None else spec.q)
        return replace(self, episodes=EpisodeSpec(
            n=spec.n if n is None else n,
            k=new_k,
            q=new_q,
            with_descriptions=spec.with_descriptions,
        ))

    # --- Serialisation ---

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in SECTIONS:
                data[f.name] = value.to_dict() if hasattr(value, "to_dict") else _plain(value)
            elif isinstance(value, tuple):
                data[f.name] = list(value)
            else:
                data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        """
        Raises:
            ConfigurationError: On unknown keys or invalid values.
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        kwargs: dict[str, Any] = {}
        for name, value in data.items():
            if name in SECTIONS:
                if not isinstance(value, Mapping):
                    raise ConfigurationError(f"config section '{name}' must be an object")
                kwargs[name] = _section(SECTIONS[name], value)
            elif name == "seeds":
                kwargs[name] = tuple(value)
            else:
                kwargs[name] = value
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigurationError(str(e)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"invalid JSON config: {e}") from None

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"cannot read config {path}: {e}") from None
        return cls.from_json(text)

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", encoding="utf-8")

    def override(self, assignments: Iterable[str]) -> "RunConfig":
        """
        Apply ``dotted.key=json_value`` assignments.

        Values are parsed as JSON, falling back to the raw string.
        """
        data = self.to_dict()
        for assignment in assignments:
            key, sep, raw = assignment.partition("=")
            if not sep:
                raise ConfigurationError(f"override '{assignment}' is not key=value")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            target = data
            *parents, leaf = key.strip().split(".")
            for part in parents:
                if not isinstance(target.get(part), dict):
                    raise ConfigurationError(f"unknown config section in '{key}'")
                target = target[part]
            target[leaf] = value
        return RunConfig.from_dict(data)


def _plain(value: Any) -> dict[str, Any]:
    return {f.name: getattr(value, f.name) for f in fields(value)}


def _section(cls: type, data: Mapping[str, Any]) -> Any:
    if hasattr(cls, "from_dict"):
        return cls.from_dict(data)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown {cls.__name__} settings: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigurationError(str(e)) from None


def flatten_config(config: Mapping[str, Any], parent_key: str = "", sep: str = ".") -> dict[str, Any]:
    """Flatten a nested config into dotted keys."""
    flat: dict[str, Any] = {}
    for key, value in config.items():
        name = f"{parent_key}{sep}{key}" if parent_key else key
        if isinstance(value, Mapping):
            flat.update(flatten_config(value, name, sep))
        else:
            flat[name] = value
    return flat
