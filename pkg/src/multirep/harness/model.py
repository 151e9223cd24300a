"""
The MultiRep few-shot classifier.

One encoder pass covers every support, query and description sentence
of an episode; all representations, embeddings, scores and losses are
derived from that pass.
"""

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from multirep.autodiff import Mode, RandomStream, Tensor, ops
from multirep.corpus import RelationDescription, RelationInstance
from multirep.encoder import Checkpoint, EncoderParams, TransformerEncoder, init_params
from multirep.episodes import EncodedEpisode, Episode
from multirep.exceptions import ConfigurationError
from multirep.harness.config import RunConfig
from multirep.objectives import (
    LossBreakdown,
    LossConfig,
    compute_prototypes,
    loss_ce,
    loss_rcl,
    loss_rdcl,
    predict,
    score_query,
    total_loss,
)
from multirep.representation import (
    RepSelector,
    RepSet,
    build_description_embedding,
    build_instance_embedding,
    instance_repset,
)
from multirep.textproc import PaddedBatch, Vocab, encode_description, encode_instance, pad_batch


@dataclass
class EpisodeResult:
    """
    Output of one episode forward pass.

    Attributes:
        scores: [N*Q, N] query scores.
        query_labels: True class of each query.
        support: [N*K, D] support embeddings.
        query: [N*Q, D] query embeddings.
        descriptions: [N, D] description embeddings, or None.
        breakdown: Loss values and graph, when losses were computed.
    """
    scores: Tensor
    query_labels: np.ndarray
    support: Tensor
    query: Tensor
    descriptions: Optional[Tensor] = None
    breakdown: Optional[LossBreakdown] = None

    @property
    def predictions(self) -> np.ndarray:
        return predict(self.scores)

    @property
    def correct(self) -> int:
        return int(np.sum(self.predictions == self.query_labels))

    @property
    def accuracy(self) -> float:
        return self.correct / len(self.query_labels) if len(self.query_labels) else 0.0


class MultiRepModel:
    """
    Encoder plus the representation, scoring and loss settings.

    Example:
        model = MultiRepModel(encoder, vocab, RepSelector.full(), LossConfig(), max_len=64)
        result = model.forward(episode, Mode.TRAIN, stream)
        result.breakdown.total
    """

    def __init__(
        self,
        encoder: TransformerEncoder,
        vocab: Vocab,
        selector: RepSelector,
        loss: LossConfig,
        max_len: int,
    ):
        if encoder.config.vocab_size != len(vocab):
            raise ConfigurationError(
                f"encoder vocabulary size {encoder.config.vocab_size} != vocab size {len(vocab)}"
            )
        self.encoder = encoder
        self.vocab = vocab
        self.selector = selector
        self.loss = loss
        self.max_len = max_len

    @classmethod
    def build(
        cls,
        config: RunConfig,
        vocab: Vocab,
        params: Optional[EncoderParams] = None,
    ) -> "MultiRepModel":
        """
        Model for a run config; fresh weights from ``config.seed`` unless
        params are given.
        """
        encoder_config = config.encoder.with_vocab_size(len(vocab))
        if params is None:
            params = init_params(encoder_config, config.seed)
        return cls(
            TransformerEncoder(encoder_config, params),
            vocab,
            config.selector,
            config.loss,
            config.data.max_len,
        )

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> tuple["MultiRepModel", RunConfig]:
        """Rebuild a trained model and the config it was trained with."""
        config = RunConfig.from_dict(checkpoint.config)
        return cls.build(config, checkpoint.vocab, checkpoint.params), config

    @property
    def params(self) -> EncoderParams:
        return self.encoder.params

    def set_params(self, params: EncoderParams) -> None:
        self.encoder.set_params(params)

    def encode_episode(self, episode: Episode) -> EncodedEpisode:
        """
        Encode an episode, keeping descriptions only when scoring uses them.

        Raises:
            ConfigurationError: If descriptions are on but the episode has none.
        """
        encoded = episode.encode(self.vocab, self.max_len)
        if not self.loss.use_descriptions:
            return replace(encoded, descriptions=None)
        if encoded.descriptions is None:
            raise ConfigurationError("descriptions are enabled but the episode carries none")
        return encoded

    def forward(
        self,
        episode: Episode,
        mode: Mode = Mode.EVAL,
        stream: Optional[RandomStream] = None,
        compute_loss: bool = True,
    ) -> EpisodeResult:
        """
        Score the queries of an episode and, optionally, compute the loss.

        L_RCL and L_RDCL run over the support set only.

        Args:
            episode: Sampled episode.
            mode: Train enables encoder and description dropout.
            stream: Random stream; required in train mode.
            compute_loss: Build the loss terms as well as the scores.
        """
        encoded = self.encode_episode(episode)
        batch, rows = encoded.joined(self.vocab.pad_id)
        hidden = self.encoder(batch, mode, stream).hidden

        def part(name: str) -> tuple[Tensor, PaddedBatch]:
            return ops.gather_rows(hidden, rows[name]), batch.select(rows[name])

        support_reps = instance_repset(*part("support"), self.selector)
        support = build_instance_embedding(support_reps, self.selector)
        query = build_instance_embedding(instance_repset(*part("query"), self.selector), self.selector)

        descriptions = None
        if encoded.descriptions is not None:
            d_hidden, d_batch = part("descriptions")
            descriptions = build_description_embedding(
                d_hidden, d_batch, self.selector.description_dropout, mode, stream, self.selector
            )

        n = episode.n
        prototypes = compute_prototypes(support, encoded.support_labels, n)
        scores = score_query(query, prototypes, descriptions, self.loss)
        result = EpisodeResult(
            scores=scores,
            query_labels=encoded.query_labels,
            support=support,
            query=query,
            descriptions=descriptions,
        )
        if compute_loss:
            result.breakdown = self._loss(result, support_reps, encoded.support_labels)
        return result

    def _loss(self, result: EpisodeResult, support_reps: RepSet, support_labels: np.ndarray) -> LossBreakdown:
        cfg = self.loss
        l_rcl = None
        if cfg.use_rcl:
            l_rcl = loss_rcl(
                support_reps.stacked(self.selector.components), cfg.temperature, cfg.contrastive_form
            )
        l_rdcl = None
        if cfg.use_rdcl:
            l_rdcl = loss_rdcl(
                result.support, support_labels, result.descriptions, cfg.temperature, cfg.contrastive_form
            )
        return total_loss(
            loss_ce(result.scores, result.query_labels),
            l_rcl,
            l_rdcl,
            cfg,
            queries=len(result.query_labels),
        )

    def predict(self, episode: Episode) -> np.ndarray:
        """Eval-mode class predictions for the episode's queries."""
        return self.forward(episode, Mode.EVAL, compute_loss=False).predictions

    # --- Standalone embeddings ---

    def embed_instances(self, instances: Sequence[RelationInstance]) -> tuple[Tensor, RepSet]:
        """
        Eval-mode instance embeddings from one encoder pass.

        Returns:
            ([B, D] embeddings, per-component representations)
        """
        batch = pad_batch(
            [encode_instance(i, self.vocab, self.max_len) for i in instances], self.vocab.pad_id
        )
        hidden = self.encoder(batch, Mode.EVAL).hidden
        reps = instance_repset(hidden, batch, self.selector)
        return build_instance_embedding(reps, self.selector), reps

    def embed_descriptions(self, descriptions: Sequence[RelationDescription]) -> Tensor:
        """Eval-mode description embeddings, [B, D]."""
        batch = pad_batch(
            [encode_description(d, self.vocab, self.max_len) for d in descriptions], self.vocab.pad_id
        )
        hidden = self.encoder(batch, Mode.EVAL).hidden
        return build_description_embedding(
            hidden, batch, self.selector.description_dropout, Mode.EVAL, None, self.selector
        )
