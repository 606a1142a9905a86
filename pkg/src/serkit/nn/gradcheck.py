"""Finite-difference verification of the analytic gradients.

Checks run on a dropout-free copy of the network in train mode with
frozen batch-norm running stats, so the loss is a smooth deterministic
function of the parameters. Relative error uses
|a - n| / max(|a| + |n|, 1e-3), which keeps float64 round-off from
dominating near-zero gradients while still flagging real sign or scale
bugs.
"""

from __future__ import annotations

import copy

import numpy as np

from .losses import cross_entropy10, mse_loss, softmax_ce_grad
from .network import LayerSpec, Mlp

DEFAULT_H = 1e-4
_REL_FLOOR = 1e-3


def _strip_dropout(model: Mlp) -> Mlp:
    clone = copy.deepcopy(model)
    clone.specs = tuple(
        LayerSpec(s.units, s.activation, 0.0, s.batch_norm) for s in clone.specs
    )
    return clone


def _loss_of(model: Mlp, x, y, loss: str):
    out, cache = model.forward(x, train=True, update_running=False)
    if loss == "mse":
        value, dout = mse_loss(out, y)
        return value, cache, dout, False
    value = cross_entropy10(out, y)
    return value, cache, softmax_ce_grad(out, y), True


def gradient_check(model: Mlp, x, y, loss: str = "mse",
                   h: float = DEFAULT_H) -> float:
    """Return the maximum relative error between backprop gradients and
    central finite differences over every trainable parameter entry."""
    if loss not in ("mse", "cross_entropy"):
        raise ValueError(f"unknown loss {loss!r}")
    work = _strip_dropout(model)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, cache, dout, fused = _loss_of(work, x, y, loss)
    grads, _ = work.backward(cache, dout, fused_softmax=fused)
    worst = 0.0
    for i, name, arr in work.param_items():
        analytic = grads[i][name]
        flat = arr.reshape(-1)
        aflat = analytic.reshape(-1)
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + h
            up = _loss_of(work, x, y, loss)[0]
            flat[j] = keep - h
            down = _loss_of(work, x, y, loss)[0]
            flat[j] = keep
            numeric = (up - down) / (2.0 * h)
            denom = max(abs(aflat[j]) + abs(numeric), _REL_FLOOR)
            err = abs(aflat[j] - numeric) / denom
            if err > worst:
                worst = err
    return worst
