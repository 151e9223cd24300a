"""
Experiment drivers: multi-seed training, ablations, the M sweep, and
the embedding and prediction exports.

Every driver trains from the same config per seed and evaluates the
best checkpoint on the held-out relations with eval-mode episodes.
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

from multirep.autodiff import Mode, using_precision
from multirep.corpus import DatasetSplit, RelationDescription
from multirep.encoder import Checkpoint
from multirep.episodes import EpisodeSampler, EpisodeSpec
from multirep.exceptions import ConfigurationError
from multirep.harness.config import RunConfig
from multirep.harness.data import RunData
from multirep.harness.evaluation import evaluate_seed
from multirep.harness.metrics import Metrics, mean_std, write_csv
from multirep.harness.model import MultiRepModel
from multirep.harness.trainer import train
from multirep.objectives import ScoreMode
from multirep.representation import rows_from_matrix, write_embeddings_csv


logger = logging.getLogger(__name__)


PathLike = Union[str, Path]


# ==================== Training over seeds ====================


def train_and_evaluate(
    config: RunConfig,
    data: RunData,
    seeds: Optional[Sequence[int]] = None,
    eval_spec: Optional[EpisodeSpec] = None,
    output_dir: Optional[PathLike] = None,
) -> Metrics:
    """
    Train once per seed and evaluate each best checkpoint.

    Args:
        config: Run config; ``config.seed`` is replaced per seed.
        data: Corpus.
        seeds: Seeds to average over; defaults to ``config.seeds``.
        eval_spec: Evaluation episode shape; defaults to the training one.
        output_dir: If given, seed s writes to ``output_dir/seed_s``.

    Returns:
        Metrics with the per-seed held-out accuracies.
    """
    seeds = tuple(config.seeds if seeds is None else seeds)
    spec = eval_spec or config.episodes
    per_seed: dict[int, float] = {}
    history = []
    for seed in seeds:
        run = config.with_seed(seed)
        out = str(Path(output_dir) / f"seed_{seed}") if output_dir else None
        result = train(run, data, out)
        with using_precision(run.precision):
            model = MultiRepModel.build(run, data.vocab, result.best.params)
            per_seed[seed] = evaluate_seed(
                model, data.held_out, spec, run.eval_episodes, seed, data.descriptions, run.workers
            )
        history.extend(result.metrics.history)
        logger.info("Seed %d: held-out %s accuracy %.4f", seed, spec.label, per_seed[seed])
    metrics = Metrics.from_seeds(per_seed, config.eval_episodes)
    metrics.history = history
    return metrics


# ==================== Ablation ====================


def _without_rcl(config: RunConfig) -> RunConfig:
    return replace(config, loss=replace(config.loss, use_rcl=False))


def _without_rdcl(config: RunConfig) -> RunConfig:
    return replace(config, loss=replace(config.loss, use_rdcl=False))


def _without_unit(unit: str) -> Callable[[RunConfig], RunConfig]:
    def arm(config: RunConfig) -> RunConfig:
        return config.with_selector(config.selector.without(unit))
    return arm


ARMS: dict[str, Callable[[RunConfig], RunConfig]] = {
    "full": lambda config: config,
    "w/o L_RCL": _without_rcl,
    "w/o L_RDCL": _without_rdcl,
    "w/o avg_pool": _without_unit("avg_pool"),
    "w/o entity_pair": _without_unit("entity_pair"),
    "w/o cls": _without_unit("cls"),
    "w/o mask": _without_unit("mask"),
    "prototype_addition": lambda config: replace(
        config, loss=replace(config.loss, score_mode=ScoreMode.PROTOTYPE_ADDITION)
    ),
    "w/o CL": lambda config: _without_rdcl(_without_rcl(config)),
}

# The seven single-change arms.
ABLATION_ARMS: tuple[str, ...] = (
    "w/o L_RCL",
    "w/o L_RDCL",
    "w/o avg_pool",
    "w/o entity_pair",
    "w/o cls",
    "w/o mask",
    "prototype_addition",
)

ABLATION_COLUMNS = ("arm", "n_way", "k_shot", "mean", "std")


def arm_config(config: RunConfig, arm: str) -> RunConfig:
    """
    Config of one ablation arm.

    Raises:
        ConfigurationError: On an unknown arm.
    """
    try:
        return ARMS[arm](config)
    except KeyError:
        raise ConfigurationError(f"unknown ablation arm '{arm}'. Valid: {', '.join(ARMS)}") from None


def ablate(
    config: RunConfig,
    data: RunData,
    arms: Iterable[str] = ABLATION_ARMS,
    out_path: Optional[PathLike] = None,
    output_dir: Optional[PathLike] = None,
) -> dict[str, Metrics]:
    """
    Train and evaluate each arm with only its named change.

    Unknown arms are rejected before any training starts.

    Returns:
        Arm -> Metrics, in the given order. With ``out_path`` also
        writes the table (arm, n_way, k_shot, mean, std).
    """
    arms = list(arms)
    configs = {arm: arm_config(config, arm) for arm in arms}
    results: dict[str, Metrics] = {}
    for arm, arm_cfg in configs.items():
        logger.info("Ablation arm %s: selector %s", arm, arm_cfg.selector.label)
        arm_dir = Path(output_dir) / _slug(arm) if output_dir else None
        results[arm] = train_and_evaluate(arm_cfg, data, output_dir=arm_dir)

    if out_path is not None:
        spec = config.episodes
        write_csv(out_path, ABLATION_COLUMNS, (
            (arm, spec.n, spec.k, m.accuracy, m.std) for arm, m in results.items()
        ))
    return results


def _slug(arm: str) -> str:
    return arm.replace("w/o ", "without_").replace("/", "_").replace(" ", "_")


# ==================== M sweep ====================


SWEEP_COLUMNS = ("m", "subset", "seed", "accuracy")


def sweep_m(
    config: RunConfig,
    data: RunData,
    seeds: Optional[Sequence[int]] = None,
    sizes: Optional[Sequence[int]] = None,
    out_path: Optional[PathLike] = None,
) -> dict[int, Metrics]:
    """
    Accuracy as a function of the number of representations.

    For each M, every size-M subset of the config's selector is trained
    and evaluated with every seed.

    Returns:
        M -> Metrics whose mean and std run over all (subset, seed)
        accuracies. With ``out_path`` also writes one CSV row per
        (M, subset, seed).
    """
    seeds = tuple(config.seeds if seeds is None else seeds)
    sizes = tuple(range(1, config.selector.m + 1)) if sizes is None else tuple(sizes)
    rows: list[tuple] = []
    results: dict[int, Metrics] = {}
    for m in sizes:
        subsets = config.selector.subsets(m)
        if not subsets:
            raise ConfigurationError(f"no representation subset of size {m}")
        accuracies = []
        for selector in subsets:
            metrics = train_and_evaluate(config.with_selector(selector), data, seeds)
            for seed, accuracy in metrics.per_seed.items():
                rows.append((m, selector.label, seed, accuracy))
                accuracies.append(accuracy)
        mean, std = mean_std(accuracies)
        results[m] = Metrics(accuracy=mean, std=std, episodes=config.eval_episodes)
        logger.info("M=%d: %d subsets, accuracy %.4f +- %.4f", m, len(subsets), mean, std)

    if out_path is not None:
        write_csv(out_path, SWEEP_COLUMNS, rows)
    return results


# ==================== Exports ====================


def _model_for(checkpoint: Checkpoint) -> tuple[MultiRepModel, RunConfig]:
    with using_precision(RunConfig.from_dict(checkpoint.config).precision):
        return MultiRepModel.from_checkpoint(checkpoint)


def sample_support(
    split: DatasetSplit,
    spec: EpisodeSpec,
    count: int,
    seed: int,
) -> list[tuple[str, int]]:
    """
    Support instances of consecutive episodes, as (relation id, index),
    until ``count`` are collected.
    """
    sampler = EpisodeSampler(split, replace(spec, with_descriptions=False), seed)
    refs: list[tuple[str, int]] = []
    index = 0
    while len(refs) < count:
        refs.extend((r.relation_id, r.index) for r in sampler.episode(index).support_refs)
        index += 1
    return refs[:count]


def export_embeddings(
    checkpoint: Checkpoint,
    split: DatasetSplit,
    spec: EpisodeSpec,
    out_path: PathLike,
    count: int = 120,
    seed: int = 0,
    component: str = "full",
    batch_size: int = 64,
) -> int:
    """
    Write eval-mode embeddings of sampled support instances to CSV.

    Args:
        checkpoint: Trained model.
        split: Split to sample from.
        spec: Episode shape used for sampling.
        out_path: CSV destination.
        count: Number of support embeddings.
        seed: Sampling seed.
        component: "full" for the concatenated embedding, or one
            representation tag.

    Returns:
        Number of rows written.
    """
    if count < 1:
        raise ConfigurationError("count must be at least 1")
    model, config = _model_for(checkpoint)
    if component != "full" and component not in model.selector.components:
        raise ConfigurationError(f"component '{component}' is not selected by the checkpoint")
    refs = sample_support(split, spec, count, seed)

    rows = []
    with using_precision(config.precision):
        for start in range(0, len(refs), batch_size):
            chunk = refs[start:start + batch_size]
            embeddings, reps = model.embed_instances([split.relations[r][i] for r, i in chunk])
            matrix = embeddings.data if component == "full" else reps[component].data
            rows.extend(rows_from_matrix(
                split.role.value, (r for r, _ in chunk), (i for _, i in chunk), component, matrix
            ))
    written = write_embeddings_csv(out_path, rows)
    logger.info("Exported %d %s embeddings (%d dims) to %s", written, component, len(rows[0].vector), out_path)
    return written


PREDICTION_COLUMNS = (
    "episode", "query", "relation_id", "gold", "predicted", "predicted_relation_id", "correct", "text",
)


def export_predictions(
    checkpoint: Checkpoint,
    split: DatasetSplit,
    spec: EpisodeSpec,
    out_path: PathLike,
    episodes: int = 10,
    seed: int = 0,
    descriptions: Optional[dict[str, RelationDescription]] = None,
) -> float:
    """
    Write one row per query of a fixed episode stream.

    Two checkpoints exported with the same split, spec and seed see the
    same queries row by row, so their predictions can be compared.

    Returns:
        Accuracy over the exported queries.
    """
    model, config = _model_for(checkpoint)
    spec = replace(spec, with_descriptions=model.loss.use_descriptions)
    sampler = EpisodeSampler(split, spec, seed, descriptions)
    rows = []
    correct = 0
    with using_precision(config.precision):
        for index in range(episodes):
            episode = sampler.episode(index)
            result = model.forward(episode, Mode.EVAL, compute_loss=False)
            predictions = result.predictions
            for q, (instance, gold, pred) in enumerate(zip(episode.query, result.query_labels, predictions)):
                hit = int(gold == pred)
                correct += hit
                rows.append((
                    index, q, instance.relation_id, int(gold), int(pred),
                    episode.relation_ids[int(pred)], hit, instance.text,
                ))
    write_csv(out_path, PREDICTION_COLUMNS, rows)
    accuracy = correct / len(rows) if rows else 0.0
    logger.info("Exported %d predictions to %s (accuracy %.4f)", len(rows), out_path, accuracy)
    return accuracy
