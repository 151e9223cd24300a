"""
MultiRep - Few-shot relation classification with multiple representations

One pass of a small transformer encoder yields several sentence
representations (average pooling, [CLS], [MASK], entity markers); they
are aligned by contrastive losses and classified against prototypes and
relation descriptions in N-way K-shot episodes.

Example:
    from multirep import MultiRepModel, RunConfig, evaluate, load_data, train

    config = RunConfig(iterations=500)
    data = load_data(config)
    result = train(config, data, output_dir="runs/a")

    model = MultiRepModel.build(config, data.vocab, result.best.params)
    metrics = evaluate(model, data.held_out, config.episodes, 1000, seeds=(0, 1, 2))
    print(f"{metrics.accuracy:.3f} +- {metrics.std:.3f}")
"""

__version__ = "0.1.0"
__author__ = "MultiRep Contributors"

# Numerics
from multirep.autodiff import Mode, RandomStream, Tensor, using_precision

# Corpus and episodes
from multirep.corpus import (
    DatasetSplit,
    RelationDescription,
    RelationInstance,
    SyntheticSpec,
    generate_synthetic,
    load_descriptions_json,
    load_fewrel_json,
)
from multirep.episodes import Episode, EpisodeSampler, EpisodeSpec

# Model
from multirep.encoder import Checkpoint, EncoderConfig
from multirep.objectives import LossBreakdown, LossConfig, ScoreMode
from multirep.representation import RepSelector

# Harness
from multirep.harness import (
    Metrics,
    MultiRepModel,
    RunConfig,
    RunData,
    Trainer,
    ablate,
    evaluate,
    evaluate_grid,
    export_embeddings,
    load_data,
    run_gradcheck,
    sweep_m,
    train,
)

# Command layer
from multirep.command import CommandContext, CommandRegistry, CommandResult, HookType, default_registry

# Exceptions
from multirep.exceptions import (
    ConfigurationError,
    DataError,
    DivergenceError,
    GradientCheckError,
    MultiRepError,
    NumericalError,
)

__all__ = [
    # Version
    "__version__",
    # Numerics
    "Tensor",
    "Mode",
    "RandomStream",
    "using_precision",
    # Corpus and episodes
    "RelationInstance",
    "RelationDescription",
    "DatasetSplit",
    "SyntheticSpec",
    "generate_synthetic",
    "load_fewrel_json",
    "load_descriptions_json",
    "Episode",
    "EpisodeSpec",
    "EpisodeSampler",
    # Model
    "EncoderConfig",
    "Checkpoint",
    "LossConfig",
    "LossBreakdown",
    "ScoreMode",
    "RepSelector",
    # Harness
    "RunConfig",
    "RunData",
    "load_data",
    "MultiRepModel",
    "Trainer",
    "train",
    "evaluate",
    "evaluate_grid",
    "ablate",
    "sweep_m",
    "export_embeddings",
    "run_gradcheck",
    "Metrics",
    # Command layer
    "CommandRegistry",
    "CommandContext",
    "CommandResult",
    "HookType",
    "default_registry",
    # Exceptions
    "MultiRepError",
    "ConfigurationError",
    "DataError",
    "NumericalError",
    "DivergenceError",
    "GradientCheckError",
]
