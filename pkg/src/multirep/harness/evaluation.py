"""
Episode-based evaluation.

Accuracy is the fraction of query instances whose highest-scoring
class is their true class, over a fixed stream of episodes per seed.
Everything runs in eval mode, so a checkpoint, split, spec and seed
fix the number exactly.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Mapping, Optional, Sequence

from multirep.autodiff import Mode, get_precision, using_precision
from multirep.corpus import DatasetSplit, RelationDescription
from multirep.episodes import EpisodeSampler, EpisodeSpec
from multirep.exceptions import ConfigurationError, SamplingError
from multirep.harness.metrics import Metrics
from multirep.harness.model import MultiRepModel


logger = logging.getLogger(__name__)


# The four N-way K-shot cells results are reported in.
GRID_CELLS: tuple[EpisodeSpec, ...] = (
    EpisodeSpec(n=5, k=1),
    EpisodeSpec(n=5, k=5),
    EpisodeSpec(n=10, k=1),
    EpisodeSpec(n=10, k=5),
)

GRID_COLUMNS = ("cell", "n_way", "k_shot", "mean", "std")


def _episode_correct(model: MultiRepModel, sampler: EpisodeSampler, index: int) -> tuple[int, int]:
    result = model.forward(sampler.episode(index), Mode.EVAL, compute_loss=False)
    return result.correct, len(result.query_labels)


def evaluate_seed(
    model: MultiRepModel,
    split: DatasetSplit,
    spec: EpisodeSpec,
    episodes: int,
    seed: int,
    descriptions: Optional[Mapping[str, RelationDescription]] = None,
    workers: int = 1,
) -> float:
    """
    Accuracy over episodes 0 .. episodes-1 of one seeded stream.

    Episodes fan out over ``workers`` threads; the result does not
    depend on the worker count.
    """
    spec = replace(spec, with_descriptions=model.loss.use_descriptions)
    sampler = EpisodeSampler(split, spec, seed, descriptions)
    if workers > 1:
        precision = get_precision()

        def work(index: int) -> tuple[int, int]:
            with using_precision(precision):
                return _episode_correct(model, sampler, index)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(work, range(episodes)))
    else:
        counts = [_episode_correct(model, sampler, i) for i in range(episodes)]
    correct = sum(c for c, _ in counts)
    total = sum(t for _, t in counts)
    return correct / total if total else 0.0


def evaluate(
    model: MultiRepModel,
    split: DatasetSplit,
    spec: EpisodeSpec,
    episodes: int,
    seeds: Sequence[int],
    descriptions: Optional[Mapping[str, RelationDescription]] = None,
    workers: int = 1,
) -> Metrics:
    """
    Mean and standard deviation of accuracy across seeds.

    Raises:
        ConfigurationError: If the split has fewer than N relations.
        SamplingError: If a relation cannot fill K+Q slots.
    """
    if episodes < 1:
        raise ConfigurationError("evaluation needs at least one episode")
    per_seed = {
        int(seed): evaluate_seed(model, split, spec, episodes, seed, descriptions, workers)
        for seed in seeds
    }
    metrics = Metrics.from_seeds(per_seed, episodes)
    logger.info(
        "Evaluated %s on %d relations: accuracy %.4f +- %.4f (%d episodes x %d seeds)",
        spec.label, len(split), metrics.accuracy, metrics.std, episodes, len(per_seed),
    )
    return metrics


def evaluate_grid(
    model: MultiRepModel,
    split: DatasetSplit,
    episodes: int,
    seeds: Sequence[int],
    descriptions: Optional[Mapping[str, RelationDescription]] = None,
    cells: Sequence[EpisodeSpec] = GRID_CELLS,
    workers: int = 1,
) -> dict[str, Metrics]:
    """
    Evaluate every N-way K-shot cell the split can support.

    Returns:
        Cell label ("5-1", ...) -> Metrics; infeasible cells are skipped
        with a warning.
    """
    results: dict[str, Metrics] = {}
    for cell in cells:
        try:
            cell.check_feasible(split)
            results[cell.label] = evaluate(model, split, cell, episodes, seeds, descriptions, workers)
        except SamplingError as e:
            logger.warning("Skipping %s: %s", cell.label, e)
        except ConfigurationError as e:
            if cell.n <= len(split):
                raise
            logger.warning("Skipping %s: %s", cell.label, e)
    return results
