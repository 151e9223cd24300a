"""
Episodic training loop.

Each step samples a batch of training episodes, encodes every sentence
of each episode once, sums the episode losses and takes one Adam step.
The run is a pure function of its config: episodes come from the
(seed, index) sampler and dropout from per-step random streams.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from multirep.autodiff import ComputationRecord, Mode, RandomStream, backward, using_precision
from multirep.encoder import Checkpoint
from multirep.episodes import Episode, EpisodeSampler
from multirep.exceptions import DivergenceError, NumericalError
from multirep.harness.config import RunConfig
from multirep.harness.data import RunData
from multirep.harness.evaluation import evaluate
from multirep.harness.hooks import HookManager, HookType, JsonLinesHook
from multirep.harness.metrics import JsonLinesWriter, Metrics
from multirep.harness.model import MultiRepModel
from multirep.harness.optim import Adam
from multirep.objectives import LossBreakdown


logger = logging.getLogger(__name__)


BEST_DIR = "best"
LAST_DIR = "last"
CONFIG_FILE = "config.json"
TRAIN_LOG = "train.jsonl"
EPISODE_DUMP = "episodes.jsonl"


@dataclass
class TrainingEvent:
    """
    Progress record published on the ON_PROGRESS hooks.

    Attributes:
        kind: "step" for loss records, "eval" for validation results.
        step: 1-based optimizer step.
        values: Loss terms or accuracy.
    """
    kind: str
    step: int
    values: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"event": self.kind, "step": self.step, **self.values}


ProgressCallback = Callable[[TrainingEvent], None]


@dataclass
class TrainResult:
    """
    Outcome of a training run.

    Attributes:
        last: Checkpoint after the final step.
        best: Checkpoint with the best validation accuracy.
        best_step: Step the best checkpoint was taken at.
        metrics: Best validation accuracy and the loss history.
        output_dir: Where artefacts were written, if anywhere.
    """
    last: Checkpoint
    best: Checkpoint
    best_step: int
    metrics: Metrics
    output_dir: Optional[Path] = None


class Trainer:
    """
    Owns the parameters for the length of a run.

    Step and validation events go to the ON_PROGRESS hooks of
    ``self.hooks``, called with the trainer and the TrainingEvent. The
    loss log of a run with an output directory is one of them.

    Example:
        trainer = Trainer(config, load_data(config))
        trainer.hooks.add_function(HookType.ON_PROGRESS, lambda _, event: print(event.step))
        result = trainer.train(output_dir="runs/a")
        result.metrics.accuracy
    """

    def __init__(
        self,
        config: RunConfig,
        data: RunData,
        on_progress: Optional[ProgressCallback] = None,
        hooks: Optional[HookManager] = None,
    ):
        self.config = config
        self.data = data
        self.hooks = hooks if hooks is not None else HookManager()
        if on_progress is not None:
            self.hooks.add_function(HookType.ON_PROGRESS, lambda _, event: on_progress(event))

        # Validation uses the training episode shape.
        config.episodes.check_feasible(data.validation)
        self.sampler = EpisodeSampler(
            data.train, config.episodes, config.seed, data.descriptions, config.workers
        )
        self.optimizer = Adam(config.optimizer)
        with using_precision(config.precision):
            self.model = MultiRepModel.build(config, data.vocab)

    def _emit(self, event: TrainingEvent) -> None:
        self.hooks.run(HookType.ON_PROGRESS, self, event)

    @property
    def checkpoint_config(self) -> dict[str, Any]:
        """Run config with the encoder's vocabulary size filled in."""
        encoder = self.config.encoder.with_vocab_size(len(self.data.vocab))
        return replace(self.config, encoder=encoder).to_dict()

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(self.model.params, self.checkpoint_config, self.data.vocab)

    # --- Steps ---

    def episodes_for(self, step: int) -> list[Episode]:
        count = self.config.episodes_per_step
        return self.sampler.prefetch((step - 1) * count, count)

    def step(self, step: int, episodes: Optional[Sequence[Episode]] = None) -> LossBreakdown:
        """
        One optimizer step over ``episodes_per_step`` episodes.

        Args:
            step: 1-based step number; selects the episodes and the
                dropout streams.
            episodes: Episodes to train on instead of the sampled ones.

        Raises:
            DivergenceError: If the summed loss is not finite.
        """
        cfg = self.config
        if episodes is None:
            episodes = self.episodes_for(step)

        with ComputationRecord():
            total: Optional[LossBreakdown] = None
            try:
                for j, episode in enumerate(episodes):
                    stream = RandomStream(cfg.seed, f"train/{step}/{j}")
                    breakdown = self.model.forward(episode, Mode.TRAIN, stream).breakdown
                    total = breakdown if total is None else total + breakdown
            except NumericalError as e:
                if isinstance(e, DivergenceError):
                    raise
                raise DivergenceError(step, total) from e
            if not total.is_finite():
                raise DivergenceError(step, total)
            grads = backward(total.graph)

        self.model.set_params(self.optimizer.step(self.model.params, grads))
        return replace(total, graph=None)

    def validate(self, step: int) -> float:
        cfg = self.config
        metrics = evaluate(
            self.model,
            self.data.validation,
            cfg.episodes,
            cfg.val_episodes,
            seeds=(cfg.seed,),
            descriptions=self.data.descriptions,
            workers=cfg.workers,
        )
        self._emit(TrainingEvent("eval", step, {"accuracy": metrics.accuracy}))
        return metrics.accuracy

    # --- Run ---

    def train(self, output_dir: Optional[str] = None) -> TrainResult:
        """
        Run every step, validating at the configured interval and once
        at the end.

        With an output directory the run writes its config, the loss
        log, an episode dump and the best and last checkpoints.
        """
        cfg = self.config
        out = Path(output_dir) if output_dir else None
        with using_precision(cfg.precision):
            logger.info(
                "Training %d steps: %s, %d parameters, selector %s, %s precision",
                cfg.iterations, cfg.episodes.label, self.model.params.num_parameters(),
                self.model.selector.label, cfg.precision,
            )
            if out is None:
                return self._run(None, None)
            out.mkdir(parents=True, exist_ok=True)
            cfg.save(out / CONFIG_FILE)
            with JsonLinesWriter(out / TRAIN_LOG) as log, JsonLinesWriter(out / EPISODE_DUMP) as dump:
                log_hook = self.hooks.add(JsonLinesHook(log))
                try:
                    result = self._run(out, dump)
                finally:
                    self.hooks.remove(log_hook)
            result.output_dir = out
            return result

    def _run(self, out: Optional[Path], dump: Optional[JsonLinesWriter]) -> TrainResult:
        cfg = self.config
        history: list[LossBreakdown] = []
        best_accuracy = -1.0
        best: Optional[Checkpoint] = None
        best_step = 0

        for step in range(1, cfg.iterations + 1):
            episodes = self.episodes_for(step)
            breakdown = self.step(step, episodes)
            history.append(breakdown)
            if dump is not None:
                for episode in episodes:
                    dump.write({"step": step, **episode.to_dict()})

            if step % cfg.log_interval == 0 or step == cfg.iterations:
                self._emit(TrainingEvent("step", step, breakdown.to_dict()))
                logger.info(
                    "step %d: total %.4f (ce %.4f, rcl %.4f, rdcl %.4f)",
                    step, breakdown.total, breakdown.l_ce, breakdown.l_rcl, breakdown.l_rdcl,
                )

            interval = cfg.eval_interval and step % cfg.eval_interval == 0
            if interval or step == cfg.iterations:
                accuracy = self.validate(step)
                if accuracy > best_accuracy:
                    best_accuracy, best_step = accuracy, step
                    best = self.checkpoint()
                    if out is not None:
                        best.save(out / BEST_DIR)
                    logger.info("New best validation accuracy %.4f at step %d", accuracy, step)

        last = self.checkpoint()
        if out is not None:
            last.save(out / LAST_DIR)
        metrics = Metrics(
            accuracy=best_accuracy,
            per_seed={cfg.seed: best_accuracy},
            episodes=cfg.val_episodes,
            history=history,
        )
        return TrainResult(last=last, best=best, best_step=best_step, metrics=metrics)


def train(
    config: RunConfig,
    data: RunData,
    output_dir: Optional[str] = None,
    on_progress: Optional[ProgressCallback] = None,
    hooks: Optional[HookManager] = None,
) -> TrainResult:
    """Train a model from scratch; see Trainer."""
    return Trainer(config, data, on_progress, hooks).train(output_dir)
