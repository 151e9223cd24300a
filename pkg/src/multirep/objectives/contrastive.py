"""
Contrastive losses.

Both losses work on cosine similarities divided by the temperature.
For every anchor the positive logit competes with the anchor's negative
logits through a log-sum-exp, so a term is exactly zero when the anchor
has no negatives.
"""

from typing import Sequence, Union

import numpy as np

from multirep.autodiff import Tensor, ops
from multirep.exceptions import ConfigurationError, ShapeError
from multirep.objectives.config import ContrastiveForm


FormLike = Union[ContrastiveForm, str]


def _positive_similarity(units: Tensor) -> Tensor:
    """Sum over k != m of cos(r_i^m, r_i^k), as [M, S]."""
    others = ops.sub(ops.sum(units, axis=0, keepdims=True), units)
    return ops.sum(ops.mul(units, others), axis=-1)


def loss_rcl(
    reps: Union[Tensor, Sequence[Tensor]],
    temperature: float,
    form: FormLike = ContrastiveForm.INFONCE,
) -> Tensor:
    """
    Representation-representation contrastive loss.

    For sentence i and representation m the positive score is
    phi = sum over k != m of cos(r_i^m, r_i^k); the negatives are
    cos(r_i^m, r_j^m) for every other sentence j. The InfoNCE term is
    -log(exp(phi/tau) / (exp(phi/tau) + sum_j exp(cos_ij/tau))), summed
    over i and m.

    Args:
        reps: [M, S, d] stack of M representations of S sentences, or a
            sequence of M [S, d] tensors.
        temperature: tau > 0.
        form: InfoNCE or literal.

    Returns:
        Scalar loss.

    Raises:
        DegenerateVectorError: If any representation has zero norm.
    """
    if not isinstance(reps, Tensor):
        reps = ops.stack(list(reps), axis=0)
    if reps.ndim != 3:
        raise ShapeError(f"loss_rcl expects [M, S, d] representations, got {reps.shape}")
    if temperature <= 0:
        raise ConfigurationError("temperature must be positive")
    sentences = reps.shape[1]

    units = ops.normalize_rows(reps)
    positive = _positive_similarity(units)
    similarity = ops.matmul(units, ops.transpose(units, (0, 2, 1)))
    off_diagonal = Tensor(1.0 - np.eye(sentences))

    if ContrastiveForm(form) is ContrastiveForm.LITERAL:
        negative = ops.sum(ops.mul(similarity, off_diagonal), axis=-1)
        return ops.scale(ops.sum(ops.sub(negative, positive)), 1.0 / temperature)

    # Row i of each [S, S] block: negatives off the diagonal, phi on it.
    logits = ops.add(
        ops.mul(similarity, off_diagonal),
        ops.mul(ops.reshape(positive, positive.shape + (1,)), Tensor(np.eye(sentences))),
    )
    logits = ops.scale(logits, 1.0 / temperature)
    per_anchor = ops.sub(ops.logsumexp(logits, axis=-1), ops.scale(positive, 1.0 / temperature))
    return ops.sum(per_anchor)


def loss_rdcl(
    instances: Tensor,
    labels: Union[Sequence[int], np.ndarray],
    descriptions: Tensor,
    temperature: float,
    form: FormLike = ContrastiveForm.INFONCE,
) -> Tensor:
    """
    Instance-description contrastive loss.

    Each instance R_i is pulled toward the description of its label and
    pushed from the other N-1 descriptions of the episode.

    Args:
        instances: [S, D] instance embeddings.
        labels: Class index of each instance.
        descriptions: [N, D] description embeddings in class order.
        temperature: tau > 0.
        form: InfoNCE or literal.

    Returns:
        Scalar loss.

    Raises:
        ConfigurationError: If a label has no description.
        ShapeError: If embedding dimensions differ.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if instances.ndim != 2 or descriptions.ndim != 2 or instances.shape[1] != descriptions.shape[1]:
        raise ShapeError(
            f"instance {instances.shape} and description {descriptions.shape} embeddings do not pair"
        )
    if labels.shape != (instances.shape[0],):
        raise ShapeError("one label per instance is required")
    classes = descriptions.shape[0]
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ConfigurationError(f"a support label has no description among {classes}")
    if temperature <= 0:
        raise ConfigurationError("temperature must be positive")

    cosines = ops.pairwise_cosine(instances, descriptions)
    one_hot = np.eye(classes)[labels]
    positive = ops.sum(ops.mul(cosines, Tensor(one_hot)), axis=-1)

    if ContrastiveForm(form) is ContrastiveForm.LITERAL:
        negative = ops.sum(ops.mul(cosines, Tensor(1.0 - one_hot)), axis=-1)
        return ops.scale(ops.sum(ops.sub(negative, positive)), 1.0 / temperature)

    logits = ops.scale(cosines, 1.0 / temperature)
    per_instance = ops.sub(ops.logsumexp(logits, axis=-1), ops.scale(positive, 1.0 / temperature))
    return ops.sum(per_instance)
