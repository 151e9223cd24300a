"""
Encoder parameters.

All weights live in one flat, ordered name -> Tensor mapping so that the
optimizer, the gradient checker and the checkpoint writer can enumerate
them the same way.
"""

import logging
from typing import Iterator, Mapping

import numpy as np

from multirep.autodiff import Tensor
from multirep.encoder.config import EncoderConfig
from multirep.exceptions import ConfigurationError, ContractError


logger = logging.getLogger(__name__)


def parameter_shapes(config: EncoderConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape for every parameter, in canonical order."""
    d, f = config.hidden, config.ff
    shapes: dict[str, tuple[int, ...]] = {
        "embeddings.token": (config.vocab_size, d),
        "embeddings.position": (config.max_positions, d),
    }
    for i in range(config.layers):
        p = f"layers.{i}"
        shapes.update({
            f"{p}.attn.wq": (d, d), f"{p}.attn.bq": (d,),
            f"{p}.attn.wk": (d, d), f"{p}.attn.bk": (d,),
            f"{p}.attn.wv": (d, d), f"{p}.attn.bv": (d,),
            f"{p}.attn.wo": (d, d), f"{p}.attn.bo": (d,),
            f"{p}.ln1.gamma": (d,), f"{p}.ln1.beta": (d,),
            f"{p}.ffn.w1": (d, f), f"{p}.ffn.b1": (f,),
            f"{p}.ffn.w2": (f, d), f"{p}.ffn.b2": (d,),
            f"{p}.ln2.gamma": (d,), f"{p}.ln2.beta": (d,),
        })
    return shapes


class EncoderParams:
    """
    Ordered, immutable collection of named trainable tensors.

    Updating parameters builds a new collection with ``replace``; the
    tensors handed out earlier stay valid.

    Example:
        params = init_params(config, seed=0)
        params["embeddings.token"].shape   # (V, d)
        params = params.replace({"layers.0.ffn.b1": new_bias})
    """

    def __init__(self, tensors: Mapping[str, Tensor]):
        self._tensors = dict(tensors)
        for name, tensor in self._tensors.items():
            if not tensor.requires_grad:
                raise ContractError(f"parameter '{name}' does not require gradients")

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray]) -> "EncoderParams":
        return cls({name: Tensor(a, requires_grad=True, name=name) for name, a in arrays.items()})

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._tensors[name]
        except KeyError:
            raise KeyError(f"no parameter named '{name}'") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def __contains__(self, name: object) -> bool:
        return name in self._tensors

    @property
    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._tensors.items())

    def tensors(self) -> list[Tensor]:
        return list(self._tensors.values())

    def arrays(self) -> dict[str, np.ndarray]:
        """Name -> read-only data array."""
        return {name: t.data for name, t in self._tensors.items()}

    def num_parameters(self) -> int:
        return sum(t.size for t in self._tensors.values())

    def replace(self, updates: Mapping[str, np.ndarray]) -> "EncoderParams":
        """New collection with some tensors swapped for new values."""
        tensors = dict(self._tensors)
        for name, value in updates.items():
            if name not in tensors:
                raise KeyError(f"no parameter named '{name}'")
            if np.shape(value) != tensors[name].shape:
                raise ContractError(
                    f"parameter '{name}' has shape {tensors[name].shape}, "
                    f"update has {np.shape(value)}"
                )
            tensors[name] = Tensor(value, requires_grad=True, name=name)
        return EncoderParams(tensors)

    def equals(self, other: "EncoderParams") -> bool:
        """Same names, shapes and exactly equal values."""
        return self.names == other.names and all(
            np.array_equal(self[n].data, other[n].data) for n in self.names
        )

    def check_config(self, config: EncoderConfig) -> None:
        """
        Raises:
            ContractError: If names or shapes differ from the config's.
        """
        expected = parameter_shapes(config)
        actual = {name: t.shape for name, t in self._tensors.items()}
        if expected != actual:
            missing = sorted(set(expected) - set(actual))
            extra = sorted(set(actual) - set(expected))
            wrong = sorted(n for n in set(expected) & set(actual) if expected[n] != actual[n])
            raise ContractError(
                f"parameters do not match the encoder config "
                f"(missing={missing}, unexpected={extra}, wrong shape={wrong})"
            )

    def __repr__(self) -> str:
        return f"EncoderParams(tensors={len(self)}, values={self.num_parameters()})"


def init_params(config: EncoderConfig, seed: int) -> EncoderParams:
    """
    Initialise every parameter from a seed.

    Projection and embedding matrices are drawn uniformly with a
    fan-scaled bound; biases and layer-norm betas are zero; layer-norm
    gammas are one.

    Raises:
        ConfigurationError: If the config has no vocabulary size yet.
    """
    if config.vocab_size < 1:
        raise ConfigurationError("encoder config has no vocabulary size")

    rng = np.random.default_rng(seed)
    arrays: dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".gamma"):
            arrays[name] = np.ones(shape)
        elif len(shape) == 1:
            arrays[name] = np.zeros(shape)
        elif name.startswith("embeddings."):
            bound = np.sqrt(3.0 / shape[1])
            arrays[name] = rng.uniform(-bound, bound, size=shape)
        else:
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            arrays[name] = rng.uniform(-bound, bound, size=shape)

    params = EncoderParams.from_arrays(arrays)
    logger.debug("Initialised %r from seed %d", params, seed)
    return params
