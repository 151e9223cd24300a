"""
The finite-difference suite behind ``multirep gradcheck``.

Three groups, all in double precision:

* every autodiff operation, over random inputs in [-2, 2];
* a one-layer encoder (d=8, 2 heads, 6 positions) in train mode;
* the total MultiRep loss on a 2-way 1-shot episode with descriptions.

Randomness inside a checked function (dropout masks, loss weights) is
rebuilt from fixed seeds on every call.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from multirep.autodiff import (
    GradCheckReport,
    Mode,
    RandomStream,
    Tensor,
    check_gradients,
    ops,
)
from multirep.autodiff.gradcheck import DEFAULT_TOLERANCE
from multirep.corpus import DatasetSplit, RelationDescription, RelationInstance, SplitRole
from multirep.encoder import EncoderConfig, EncoderParams, TransformerEncoder, encode, init_params
from multirep.episodes import Episode, InstanceRef
from multirep.harness.model import MultiRepModel
from multirep.objectives import LossConfig
from multirep.representation import RepSelector
from multirep.textproc import Vocab, build_vocab


logger = logging.getLogger(__name__)


InputMaker = Callable[[np.random.Generator], dict[str, np.ndarray]]
OpFunction = Callable[[Mapping[str, Tensor]], Tensor]


@dataclass(frozen=True)
class OpCase:
    """One operation under test: how to draw inputs and apply it."""
    name: str
    inputs: InputMaker
    apply: OpFunction


def _uniform(*shape: int) -> Callable[[np.random.Generator], np.ndarray]:
    return lambda rng: rng.uniform(-2.0, 2.0, size=shape)


def _away_from_zero(*shape: int) -> Callable[[np.random.Generator], np.ndarray]:
    return lambda rng: rng.choice([-1.0, 1.0], size=shape) * rng.uniform(0.5, 2.0, size=shape)


def _positive(*shape: int) -> Callable[[np.random.Generator], np.ndarray]:
    return lambda rng: rng.uniform(0.5, 2.0, size=shape)


def _case(name: str, apply: OpFunction, **makers: Callable[[np.random.Generator], np.ndarray]) -> OpCase:
    return OpCase(name, lambda rng: {k: make(rng) for k, make in makers.items()}, apply)


_GATHER = np.array([0, 2, 2, 4])
_KEEP = np.array([[True, False, True, True], [True, True, False, True], [False, True, True, True]])

OP_CASES: tuple[OpCase, ...] = (
    _case("add", lambda t: ops.add(t["a"], t["b"]), a=_uniform(3, 4), b=_uniform(4)),
    _case("sub", lambda t: ops.sub(t["a"], t["b"]), a=_uniform(3, 4), b=_uniform(3, 1)),
    _case("mul", lambda t: ops.mul(t["a"], t["b"]), a=_uniform(2, 3), b=_uniform(2, 3)),
    _case("div", lambda t: ops.div(t["a"], t["b"]), a=_uniform(2, 3), b=_away_from_zero(2, 3)),
    _case("scale", lambda t: ops.scale(t["a"], 0.7), a=_uniform(3, 2)),
    _case("exp", lambda t: ops.exp(t["a"]), a=_uniform(3, 3)),
    _case("log", lambda t: ops.log(t["a"]), a=_positive(3, 3)),
    _case("gelu", lambda t: ops.gelu(t["a"]), a=_uniform(4, 3)),
    _case("matmul", lambda t: ops.matmul(t["a"], t["b"]), a=_uniform(2, 3, 4), b=_uniform(4, 5)),
    _case("transpose", lambda t: ops.transpose(t["a"], (2, 0, 1)), a=_uniform(2, 3, 4)),
    _case("reshape", lambda t: ops.reshape(t["a"], (3, 4)), a=_uniform(2, 6)),
    _case("concat", lambda t: ops.concat([t["a"], t["b"]], axis=1), a=_uniform(2, 3), b=_uniform(2, 2)),
    _case("stack", lambda t: ops.stack([t["a"], t["b"]], axis=0), a=_uniform(3), b=_uniform(3)),
    _case("gather_rows", lambda t: ops.gather_rows(t["a"], _GATHER), a=_uniform(5, 3)),
    _case("sum", lambda t: ops.sum(t["a"], axis=1, keepdims=True), a=_uniform(3, 4)),
    _case("mean", lambda t: ops.mean(t["a"], axis=0), a=_uniform(3, 4)),
    _case("logsumexp", lambda t: ops.logsumexp(t["a"], axis=-1), a=_uniform(3, 4)),
    _case("softmax", lambda t: ops.softmax(t["a"], axis=-1), a=_uniform(3, 4)),
    _case("log_softmax", lambda t: ops.log_softmax(t["a"], axis=-1), a=_uniform(3, 4)),
    _case(
        "layer_norm",
        lambda t: ops.layer_norm(t["x"], t["gamma"], t["beta"]),
        x=_uniform(3, 4), gamma=_uniform(4), beta=_uniform(4),
    ),
    _case("normalize_rows", lambda t: ops.normalize_rows(t["a"]), a=_away_from_zero(3, 4)),
    _case("cosine", lambda t: ops.cosine(t["u"], t["v"]), u=_away_from_zero(5), v=_away_from_zero(5)),
    _case(
        "pairwise_cosine",
        lambda t: ops.pairwise_cosine(t["a"], t["b"]),
        a=_away_from_zero(3, 4), b=_away_from_zero(2, 4),
    ),
    _case("dropout", lambda t: ops.apply_dropout_mask(t["a"], _KEEP, 0.25), a=_uniform(3, 4)),
)


def _weighted_sum(out: Tensor, seed: int) -> Tensor:
    """Scalar with a distinct random weight on every output entry."""
    weights = np.random.default_rng(seed).uniform(-1.0, 1.0, size=out.shape)
    return ops.sum(ops.mul(out, Tensor(weights)))


def check_ops(
    trials: int = 10,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
    cases: tuple[OpCase, ...] = OP_CASES,
) -> GradCheckReport:
    """Check every operation on ``trials`` random draws."""
    report = GradCheckReport()
    rng = np.random.default_rng(seed)
    for case in cases:
        for trial in range(trials):
            inputs = case.inputs(rng)
            weight_seed = int(rng.integers(2**31))
            fn = lambda t, case=case, weight_seed=weight_seed: _weighted_sum(case.apply(t), weight_seed)
            report.extend(
                check_gradients(fn, inputs, tolerance=tolerance),
                prefix=f"ops.{case.name}[{trial}].",
            )
    return report


def _trainable(tensors: Mapping[str, Tensor]) -> EncoderParams:
    # Numeric passes hand in plain tensors; parameters must require grad.
    return EncoderParams({
        name: t if t.requires_grad else Tensor(t.data, requires_grad=True, name=name)
        for name, t in tensors.items()
    })


def check_encoder(seed: int = 0, tolerance: float = DEFAULT_TOLERANCE) -> GradCheckReport:
    """Check every encoder parameter on a padded two-sentence batch."""
    config = EncoderConfig(vocab_size=11, layers=1, hidden=8, heads=2, ff=16, dropout=0.1, max_positions=6)
    params = init_params(config, seed)
    rng = np.random.default_rng(seed)
    ids = rng.integers(1, config.vocab_size, size=(2, 6))
    mask = np.ones((2, 6), dtype=np.int64)
    mask[1, 4:] = 0
    ids[1, 4:] = 0

    def fn(tensors: Mapping[str, Tensor]) -> Tensor:
        stream = RandomStream(seed, "gradcheck/encoder")
        hidden = encode(_trainable(tensors), config, ids, mask, Mode.TRAIN, stream).hidden
        return _weighted_sum(hidden, seed + 1)

    return check_gradients(fn, params.arrays(), tolerance=tolerance)


def toy_episode() -> tuple[Episode, Vocab]:
    """A fixed 2-way 1-shot episode with descriptions, and its vocabulary."""
    def instance(text: str, head: int, tail: int, rid: str) -> RelationInstance:
        return RelationInstance(tuple(text.split()), (head, head), (tail, tail), rid)

    founded = (
        instance("alice founded acme in paris", 0, 2, "P1"),
        instance("bob started initech last year", 0, 2, "P1"),
    )
    lives = (
        instance("carol lives in rome", 0, 3, "P2"),
        instance("dave resides near oslo", 0, 3, "P2"),
    )
    descriptions = {
        "P1": RelationDescription("P1", "founded by", "organisation started by a person"),
        "P2": RelationDescription("P2", "residence", "place where a person lives"),
    }
    split = DatasetSplit({"P1": founded, "P2": lives}, SplitRole.TRAIN)
    episode = Episode(
        relation_ids=("P1", "P2"),
        support=(founded[0], lives[0]),
        support_refs=(InstanceRef("P1", 0), InstanceRef("P2", 0)),
        query=(founded[1], lives[1]),
        query_refs=(InstanceRef("P1", 1), InstanceRef("P2", 1)),
        descriptions=(descriptions["P1"], descriptions["P2"]),
    )
    return episode, build_vocab([split], descriptions)


def check_total_loss(
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
    max_entries: Optional[int] = 24,
    loss: Optional[LossConfig] = None,
) -> GradCheckReport:
    """
    Check the total loss (CE + both contrastive terms) with respect to
    every encoder parameter, in train mode.
    """
    episode, vocab = toy_episode()
    config = EncoderConfig(
        vocab_size=len(vocab), layers=1, hidden=8, heads=2, ff=16, dropout=0.1, max_positions=32,
    )
    params = init_params(config, seed)
    selector = RepSelector.full()
    loss = loss or LossConfig(temperature=0.5)

    def fn(tensors: Mapping[str, Tensor]) -> Tensor:
        encoder = TransformerEncoder(config, _trainable(tensors))
        model = MultiRepModel(encoder, vocab, selector, loss, max_len=config.max_positions)
        stream = RandomStream(seed, "gradcheck/total")
        return model.forward(episode, Mode.TRAIN, stream).breakdown.graph

    return check_gradients(fn, params.arrays(), tolerance=tolerance, max_entries=max_entries, seed=seed)


def run_gradcheck(
    trials: int = 10,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
) -> GradCheckReport:
    """
    Run the whole suite.

    Returns:
        One report over all groups; names are prefixed "ops.",
        "encoder." and "loss.".
    """
    started = time.perf_counter()
    report = GradCheckReport()
    report.extend(check_ops(trials, seed, tolerance))
    report.extend(check_encoder(seed, tolerance), prefix="encoder.")
    report.extend(check_total_loss(seed, tolerance), prefix="loss.")
    logger.info(
        "Gradient check: %d tensors, %d failures, max relative error %.3e (%.1fs)",
        len(report.results), len(report.failures), report.max_error, time.perf_counter() - started,
    )
    for failure in report.failures:
        logger.error("Gradient mismatch: %s", failure)
    return report
