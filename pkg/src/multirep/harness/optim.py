"""
Adam over encoder parameters.
"""

from typing import Optional

import numpy as np

from multirep.autodiff import GradientMap
from multirep.encoder import EncoderParams
from multirep.harness.config import OptimizerConfig


class Adam:
    """
    Adam with bias correction.

    Moments are kept per parameter name. ``step`` returns a new
    EncoderParams; the old one stays valid for anything still holding it.

    Example:
        optimizer = Adam(OptimizerConfig(lr=1e-3))
        params = optimizer.step(params, grads)
    """

    def __init__(self, config: Optional[OptimizerConfig] = None):
        self.config = config or OptimizerConfig()
        self.steps = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: EncoderParams, grads: GradientMap) -> EncoderParams:
        cfg = self.config
        self.steps += 1
        correction1 = 1.0 - cfg.beta1 ** self.steps
        correction2 = 1.0 - cfg.beta2 ** self.steps

        updates: dict[str, np.ndarray] = {}
        for name, tensor in params.items():
            grad = grads[tensor]
            m = self._m.get(name)
            v = self._v.get(name)
            if m is None:
                m = np.zeros_like(tensor.data)
                v = np.zeros_like(tensor.data)
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad
            self._m[name] = m
            self._v[name] = v
            step = cfg.lr * (m / correction1) / (np.sqrt(v / correction2) + cfg.eps)
            updates[name] = (tensor.data - step).astype(tensor.dtype)
        return params.replace(updates)

