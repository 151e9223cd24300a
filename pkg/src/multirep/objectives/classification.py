"""
Prototype scoring and the classification loss.
"""

from typing import Optional, Sequence, Union

import numpy as np

from multirep.autodiff import Tensor, ops
from multirep.exceptions import ConfigurationError, ContractError, ShapeError
from multirep.objectives.config import LossBreakdown, LossConfig, ScoreMode


Labels = Union[Sequence[int], np.ndarray]


def compute_prototypes(support: Tensor, labels: Labels, num_classes: int) -> Tensor:
    """
    Per-class mean of support embeddings.

    Args:
        support: [N*K, D] embeddings in any order.
        labels: Class index of each row.
        num_classes: N.

    Returns:
        [N, D] prototypes in class order.

    Raises:
        ContractError: If classes have different support counts or a
            class has none.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if support.ndim != 2 or labels.shape != (support.shape[0],):
        raise ShapeError(f"support {support.shape} needs one label per row")
    counts = np.bincount(labels, minlength=num_classes) if labels.size else np.zeros(num_classes, int)
    if len(counts) != num_classes or counts.min() < 1 or np.any(counts != counts[0]):
        raise ContractError(f"every class needs the same positive support count, got {counts.tolist()}")

    rows = np.stack([np.flatnonzero(labels == c) for c in range(num_classes)])
    return ops.mean(ops.gather_rows(support, rows), axis=1)


def score_query(
    query: Tensor,
    prototypes: Tensor,
    descriptions: Optional[Tensor],
    config: LossConfig,
) -> Tensor:
    """
    Dot-product scores of queries against the N classes.

    In separate-similarities mode score_n = R.P_n + R.D_n; in
    prototype-addition mode score_n = R.(P_n + D_n). Without descriptions
    both reduce to R.P_n.

    Args:
        query: [Q, D] or [D] query embeddings.
        prototypes: [N, D].
        descriptions: [N, D] or None.
        config: Loss settings.

    Returns:
        [Q, N] (or [N]) scores.
    """
    single = query.ndim == 1
    if single:
        query = ops.reshape(query, (1, query.shape[0]))
    if prototypes.ndim != 2 or query.shape[-1] != prototypes.shape[-1]:
        raise ShapeError(f"query {query.shape} and prototypes {prototypes.shape} do not pair")

    use_descriptions = config.use_descriptions
    if use_descriptions:
        if descriptions is None:
            raise ConfigurationError("description scoring is on but no descriptions were given")
        if descriptions.shape != prototypes.shape:
            raise ShapeError(
                f"descriptions {descriptions.shape} do not match prototypes {prototypes.shape}"
            )

    if use_descriptions and config.score_mode is ScoreMode.PROTOTYPE_ADDITION:
        scores = ops.matmul(query, ops.transpose(ops.add(prototypes, descriptions)))
    else:
        scores = ops.matmul(query, ops.transpose(prototypes))
        if use_descriptions:
            scores = ops.add(scores, ops.matmul(query, ops.transpose(descriptions)))
    return ops.reshape(scores, (scores.shape[1],)) if single else scores


def predict(scores: Union[Tensor, np.ndarray]) -> np.ndarray:
    """Argmax over classes; ties go to the lowest class index."""
    values = scores.data if isinstance(scores, Tensor) else np.asarray(scores)
    return np.argmax(values, axis=-1)


def accuracy(scores: Union[Tensor, np.ndarray], labels: Labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    return float(np.mean(predict(scores) == labels))


def loss_ce(scores: Tensor, labels: Labels) -> Tensor:
    """
    Cross-entropy -log softmax(scores)[y], summed over queries.

    Raises:
        ContractError: If a label is outside [0, N).
    """
    labels = np.asarray(labels, dtype=np.int64)
    if scores.ndim != 2 or labels.shape != (scores.shape[0],):
        raise ShapeError(f"scores {scores.shape} need one label per row")
    classes = scores.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ContractError(f"label outside [0, {classes})")
    one_hot = Tensor(np.eye(classes)[labels])
    return ops.scale(ops.sum(ops.mul(ops.log_softmax(scores, axis=-1), one_hot)), -1.0)


def total_loss(
    l_ce: Tensor,
    l_rcl: Optional[Tensor],
    l_rdcl: Optional[Tensor],
    config: LossConfig,
    queries: int = 0,
) -> LossBreakdown:
    """
    Unweighted sum of the enabled loss terms.

    Terms that are disabled in ``config`` (or not computed) contribute
    exactly 0 to both the reported values and the graph.
    """
    graph = l_ce
    rcl = rdcl = 0.0
    if config.use_rcl and l_rcl is not None:
        graph = ops.add(graph, l_rcl)
        rcl = l_rcl.item()
    if config.use_rdcl and l_rdcl is not None:
        graph = ops.add(graph, l_rdcl)
        rdcl = l_rdcl.item()
    return LossBreakdown(
        l_ce=l_ce.item(),
        l_rcl=rcl,
        l_rdcl=rdcl,
        queries=queries,
        graph=graph,
    )
