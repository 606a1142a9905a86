"""Adam and RMSProp over a fixed list of parameter arrays.

Optimizers hold slot state by position, matching Mlp.param_arrays()
ordering, and update parameters in place. Weight clipping for critic
training is a separate helper so it stays out of the update rule.
"""

from __future__ import annotations

import numpy as np


class Adam:
    """Adam with bias correction; defaults beta1=0.9, beta2=0.999, eps=1e-8."""

    kind = "adam"

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        # lr = 0 is legal: it freezes parameters exactly, which the domain
        # adaptation sanity checks rely on.
        if lr < 0.0:
            raise ValueError(f"lr must be non-negative, got {lr}")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        if len(params) != len(self.m):
            raise ValueError("parameter list changed size under the optimizer")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class RmsProp:
    """RMSProp with decay 0.9 and eps 1e-8, no momentum."""

    kind = "rmsprop"

    def __init__(self, lr: float, decay: float = 0.9, eps: float = 1e-8):
        if lr < 0.0:
            raise ValueError(f"lr must be non-negative, got {lr}")
        self.lr = float(lr)
        self.decay = float(decay)
        self.eps = float(eps)
        self.step_count = 0
        self.v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.v is None:
            self.v = [np.zeros_like(p) for p in params]
        if len(params) != len(self.v):
            raise ValueError("parameter list changed size under the optimizer")
        self.step_count += 1
        for p, g, v in zip(params, grads, self.v):
            v *= self.decay
            v += (1.0 - self.decay) * (g * g)
            p -= self.lr * g / (np.sqrt(v) + self.eps)


def clip_params(params: list[np.ndarray], bound: float) -> None:
    """Clamp every entry to [-bound, bound] in place."""
    for p in params:
        np.clip(p, -bound, bound, out=p)
