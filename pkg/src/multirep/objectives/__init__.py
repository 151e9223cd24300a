"""
Objectives layer for MultiRep.

The two contrastive losses, prototype scoring, the cross-entropy loss,
and their unweighted sum.
"""

from multirep.objectives.classification import (
    accuracy,
    compute_prototypes,
    loss_ce,
    predict,
    score_query,
    total_loss,
)
from multirep.objectives.config import (
    ContrastiveForm,
    LossBreakdown,
    LossConfig,
    ScoreMode,
)
from multirep.objectives.contrastive import loss_rcl, loss_rdcl

__all__ = [
    "LossConfig",
    "LossBreakdown",
    "ScoreMode",
    "ContrastiveForm",
    "loss_rcl",
    "loss_rdcl",
    "compute_prototypes",
    "score_query",
    "predict",
    "accuracy",
    "loss_ce",
    "total_loss",
]
